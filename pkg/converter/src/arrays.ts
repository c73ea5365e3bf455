/** Shared in-memory array shapes produced by every source reader. */

export interface DenseMatrix {
  kind: "dense";
  rows: number;
  cols: number;
  /** row-major */
  data: Float64Array;
}

export interface SparseCsc {
  kind: "sparse";
  rows: number;
  cols: number;
  indptr: Int32Array; // length cols + 1
  indices: Int32Array; // row index per stored value
  values: Float64Array;
}

export type SourceArray = DenseMatrix | SparseCsc;

export function dense(rows: number, cols: number, data: Float64Array): DenseMatrix {
  if (data.length !== rows * cols) {
    throw new Error(`dense matrix ${rows}x${cols} needs ${rows * cols} values, got ${data.length}`);
  }
  return { kind: "dense", rows, cols, data };
}

/** Column-major to row-major reorder (MAT files store Fortran order). */
export function fromColumnMajor(rows: number, cols: number, colMajor: Float64Array): DenseMatrix {
  const out = new Float64Array(rows * cols);
  for (let j = 0; j < cols; j++) {
    for (let i = 0; i < rows; i++) {
      out[i * cols + j] = colMajor[j * rows + i];
    }
  }
  return dense(rows, cols, out);
}

/** Flatten an (n,) or (n,1)/(1,n) array into a plain vector. */
export function asVector(a: SourceArray, what: string): Float64Array {
  if (a.kind === "sparse") {
    throw new Error(`${what}: expected a dense vector, found a sparse matrix`);
  }
  if (a.rows !== 1 && a.cols !== 1) {
    throw new Error(`${what}: expected a vector, found shape ${a.rows}x${a.cols}`);
  }
  return a.data;
}
