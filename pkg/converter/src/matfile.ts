/** Reader for Level 5 MAT-files, the container used by the circulating
 * GAD benchmark bundles.
 *
 * Supports little-endian files with dense numeric matrices, sparse
 * matrices (how adjacency usually ships), logicals, and zlib-compressed
 * elements. Cells, structs, chars, and complex data are skipped or
 * rejected with a located error.
 */

import * as zlib from "node:zlib";
import { ConvertError } from "./errors.js";
import { SourceArray, fromColumnMajor } from "./arrays.js";

const MI_INT8 = 1;
const MI_UINT8 = 2;
const MI_INT16 = 3;
const MI_UINT16 = 4;
const MI_INT32 = 5;
const MI_UINT32 = 6;
const MI_SINGLE = 7;
const MI_DOUBLE = 9;
const MI_INT64 = 12;
const MI_UINT64 = 13;
const MI_MATRIX = 14;
const MI_COMPRESSED = 15;
const MI_UTF8 = 16;

const MX_SPARSE = 5;
const MX_DOUBLE = 6;
const MX_NUMERIC_MAX = 15;

interface Element {
  type: number;
  data: Buffer;
}

function* elements(buf: Buffer, start: number, where: string): Generator<Element> {
  let pos = start;
  while (pos + 8 <= buf.length) {
    const word = buf.readUInt32LE(pos);
    if ((word & 0xffff0000) !== 0) {
      // small data element: type and length packed into one word
      const type = word & 0xffff;
      const size = word >>> 16;
      yield { type, data: buf.subarray(pos + 4, pos + 4 + size) };
      pos += 8;
    } else {
      const size = buf.readUInt32LE(pos + 4);
      if (pos + 8 + size > buf.length) {
        throw new ConvertError(`${where}: truncated element at byte ${pos}`);
      }
      yield { type: word, data: buf.subarray(pos + 8, pos + 8 + size) };
      pos += 8 + size;
      if (word !== MI_COMPRESSED) {
        pos += (8 - (pos % 8)) % 8; // elements are 8-byte aligned, compressed ones exempt
      }
    }
  }
}

function numericValues(el: Element, where: string): Float64Array {
  const view = new DataView(el.data.buffer, el.data.byteOffset, el.data.length);
  const make = (size: number, read: (o: number) => number) => {
    const out = new Float64Array(Math.floor(el.data.length / size));
    for (let i = 0; i < out.length; i++) out[i] = read(i * size);
    return out;
  };
  switch (el.type) {
    case MI_INT8: return make(1, (o) => view.getInt8(o));
    case MI_UINT8: case MI_UTF8: return make(1, (o) => view.getUint8(o));
    case MI_INT16: return make(2, (o) => view.getInt16(o, true));
    case MI_UINT16: return make(2, (o) => view.getUint16(o, true));
    case MI_INT32: return make(4, (o) => view.getInt32(o, true));
    case MI_UINT32: return make(4, (o) => view.getUint32(o, true));
    case MI_SINGLE: return make(4, (o) => view.getFloat32(o, true));
    case MI_DOUBLE: return make(8, (o) => view.getFloat64(o, true));
    case MI_INT64: return make(8, (o) => Number(view.getBigInt64(o, true)));
    case MI_UINT64: return make(8, (o) => Number(view.getBigUint64(o, true)));
    default:
      throw new ConvertError(`${where}: unsupported numeric storage type ${el.type}`);
  }
}

function parseMatrix(el: Element, where: string): { name: string; array: SourceArray } | null {
  const subs = elements(el.data, 0, where);
  const flagsEl = subs.next().value as Element | undefined;
  const dimsEl = subs.next().value as Element | undefined;
  const nameEl = subs.next().value as Element | undefined;
  if (!flagsEl || !dimsEl || !nameEl) {
    throw new ConvertError(`${where}: malformed matrix element`);
  }
  const flags = flagsEl.data.readUInt32LE(0);
  const klass = flags & 0xff;
  const complex = (flags & 0x0800) !== 0;
  const name = nameEl.data.toString("latin1");
  const dims = Array.from(numericValues(dimsEl, `${where}:${name} dims`));

  if (klass !== MX_SPARSE && (klass < MX_DOUBLE || klass > MX_NUMERIC_MAX)) {
    return null; // cell/struct/char/object: not an array we convert
  }
  if (complex) {
    throw new ConvertError(`${where}: variable ${name} is complex, expected real data`);
  }
  if (dims.length !== 2) {
    throw new ConvertError(`${where}: variable ${name} has ${dims.length} dimensions, expected 2`);
  }
  const [rows, cols] = dims;

  if (klass === MX_SPARSE) {
    const irEl = subs.next().value as Element | undefined;
    const jcEl = subs.next().value as Element | undefined;
    const prEl = subs.next().value as Element | undefined;
    if (!irEl || !jcEl || !prEl) {
      throw new ConvertError(`${where}: sparse variable ${name} is missing ir/jc/pr`);
    }
    const ir = numericValues(irEl, `${where}:${name} ir`);
    const jc = numericValues(jcEl, `${where}:${name} jc`);
    const pr = numericValues(prEl, `${where}:${name} pr`);
    const nnz = jc[cols];
    return {
      name,
      array: {
        kind: "sparse",
        rows,
        cols,
        indptr: Int32Array.from(jc.subarray(0, cols + 1)),
        indices: Int32Array.from(ir.subarray(0, nnz)),
        values: Float64Array.from(pr.subarray(0, nnz)),
      },
    };
  }

  const prEl = subs.next().value as Element | undefined;
  if (!prEl) {
    throw new ConvertError(`${where}: variable ${name} has no data`);
  }
  const values = numericValues(prEl, `${where}:${name}`);
  if (values.length < rows * cols) {
    throw new ConvertError(`${where}: variable ${name} holds ${values.length} values for shape ${rows}x${cols}`);
  }
  return { name, array: fromColumnMajor(rows, cols, values.subarray(0, rows * cols)) };
}

export function parseMat(buf: Buffer, where: string): Map<string, SourceArray> {
  if (buf.length < 128) {
    throw new ConvertError(`${where}: too short to be a MAT-file`);
  }
  const endian = buf.subarray(126, 128).toString("latin1");
  if (endian === "MI") {
    throw new ConvertError(`${where}: big-endian MAT-files are not supported`);
  }
  if (endian !== "IM") {
    throw new ConvertError(`${where}: not a Level 5 MAT-file`);
  }
  const out = new Map<string, SourceArray>();
  const walk = (buffer: Buffer, start: number) => {
    for (const el of elements(buffer, start, where)) {
      if (el.type === MI_COMPRESSED) {
        walk(zlib.inflateSync(el.data), 0);
      } else if (el.type === MI_MATRIX) {
        const parsed = parseMatrix(el, where);
        if (parsed) {
          out.set(parsed.name, parsed.array);
        }
      }
      // other top-level element types carry no named arrays
    }
  };
  walk(buf, 128);
  return out;
}
