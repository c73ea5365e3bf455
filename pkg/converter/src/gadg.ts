/** Writer and reader for the canonical GADG graph container.
 *
 * Layout (little-endian):
 *   "GADG" | version u32 | n u64 | m u64 | d u64 | has_labels u8
 *   | row offsets (n+1) u64 | column indices (2m) u64
 *   | features (n*d) f64 row-major | labels (n) u8 if present
 *   | name length u32 | name UTF-8
 *
 * A <file>.meta.json sidecar with {name, n, m, d, anomaly_count} is
 * written next to every converted graph.
 */

import * as fs from "node:fs";
import { ConvertError } from "./errors.js";

const MAGIC = "GADG";
const VERSION = 1;

export interface GadgGraph {
  nodeCount: number;
  /** undirected edges, each once, i < j, sorted */
  edges: Array<[number, number]>;
  /** row-major n x d */
  features: Float64Array;
  featureDim: number;
  labels: Uint8Array | null;
  name: string;
}

/** Symmetrize, deduplicate, and drop self-loops; returns sorted i<j pairs. */
export function canonicalEdges(pairs: Iterable<[number, number]>, nodeCount: number,
                               where: string): Array<[number, number]> {
  const seen = new Set<number>();
  const out: Array<[number, number]> = [];
  for (const [a, b] of pairs) {
    if (!Number.isInteger(a) || !Number.isInteger(b) || a < 0 || b < 0
        || a >= nodeCount || b >= nodeCount) {
      throw new ConvertError(`${where}: edge (${a}, ${b}) outside [0, ${nodeCount})`);
    }
    if (a === b) continue; // self-loops are not stored
    const lo = Math.min(a, b);
    const hi = Math.max(a, b);
    const key = lo * nodeCount + hi;
    if (!seen.has(key)) {
      seen.add(key);
      out.push([lo, hi]);
    }
  }
  out.sort((x, y) => (x[0] - y[0]) || (x[1] - y[1]));
  return out;
}

export function writeGadg(path: string, g: GadgGraph): void {
  const n = g.nodeCount;
  const m = g.edges.length;
  const d = g.featureDim;
  if (g.features.length !== n * d) {
    throw new ConvertError(`features hold ${g.features.length} values for shape ${n}x${d}`);
  }
  for (let i = 0; i < g.features.length; i++) {
    if (!Number.isFinite(g.features[i])) {
      throw new ConvertError(
        `non-finite feature at row ${Math.floor(i / d)}, col ${i % d}`);
    }
  }
  if (g.labels && g.labels.length !== n) {
    throw new ConvertError(`labels hold ${g.labels.length} values for ${n} nodes`);
  }

  const degree = new Array<number>(n).fill(0);
  for (const [a, b] of g.edges) {
    degree[a]++;
    degree[b]++;
  }
  const indptr = new BigUint64Array(n + 1);
  for (let i = 0; i < n; i++) {
    indptr[i + 1] = indptr[i] + BigInt(degree[i]);
  }
  const indices = new BigUint64Array(2 * m);
  const cursor = Array.from(indptr.subarray(0, n), (v) => Number(v));
  // both directions, column-sorted within each row (edges arrive sorted)
  const neighbors: number[][] = Array.from({ length: n }, () => []);
  for (const [a, b] of g.edges) {
    neighbors[a].push(b);
    neighbors[b].push(a);
  }
  for (let i = 0; i < n; i++) {
    neighbors[i].sort((x, y) => x - y);
    for (const j of neighbors[i]) {
      indices[cursor[i]++] = BigInt(j);
    }
  }

  const nameBytes = Buffer.from(g.name, "utf-8");
  const total = 4 + 4 + 24 + 1
    + 8 * (n + 1) + 8 * (2 * m) + 8 * (n * d)
    + (g.labels ? n : 0) + 4 + nameBytes.length;
  const buf = Buffer.alloc(total);
  let pos = 0;
  buf.write(MAGIC, pos, "latin1"); pos += 4;
  pos = buf.writeUInt32LE(VERSION, pos);
  pos = Number(buf.writeBigUInt64LE(BigInt(n), pos));
  pos = Number(buf.writeBigUInt64LE(BigInt(m), pos));
  pos = Number(buf.writeBigUInt64LE(BigInt(d), pos));
  pos = buf.writeUInt8(g.labels ? 1 : 0, pos);
  Buffer.from(indptr.buffer, indptr.byteOffset, indptr.byteLength).copy(buf, pos);
  pos += indptr.byteLength;
  Buffer.from(indices.buffer, indices.byteOffset, indices.byteLength).copy(buf, pos);
  pos += indices.byteLength;
  Buffer.from(g.features.buffer, g.features.byteOffset, g.features.byteLength).copy(buf, pos);
  pos += g.features.byteLength;
  if (g.labels) {
    Buffer.from(g.labels).copy(buf, pos);
    pos += n;
  }
  pos = buf.writeUInt32LE(nameBytes.length, pos);
  nameBytes.copy(buf, pos);
  fs.writeFileSync(path, buf);

  const anomalyCount = g.labels ? g.labels.reduce((s, v) => s + v, 0) : null;
  const meta = { name: g.name, n, m, d, anomaly_count: anomalyCount };
  fs.writeFileSync(`${path}.meta.json`, JSON.stringify(meta, null, 2) + "\n");
}

export function readGadg(path: string): GadgGraph {
  const buf = fs.readFileSync(path);
  if (buf.length < 33 || buf.subarray(0, 4).toString("latin1") !== MAGIC) {
    throw new ConvertError(`${path}: not a GADG file`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) {
    throw new ConvertError(`${path}: unsupported version ${version}`);
  }
  const n = Number(buf.readBigUInt64LE(8));
  const m = Number(buf.readBigUInt64LE(16));
  const d = Number(buf.readBigUInt64LE(24));
  const hasLabels = buf.readUInt8(32);
  let pos = 33;
  const indptr = new BigUint64Array(n + 1);
  for (let i = 0; i <= n; i++, pos += 8) indptr[i] = buf.readBigUInt64LE(pos);
  const pairs: Array<[number, number]> = [];
  for (let i = 0; i < n; i++) {
    for (let k = Number(indptr[i]); k < Number(indptr[i + 1]); k++) {
      const j = Number(buf.readBigUInt64LE(pos + 8 * k));
      if (i < j) pairs.push([i, j]);
    }
  }
  pos += 8 * 2 * m;
  const features = new Float64Array(n * d);
  for (let i = 0; i < n * d; i++, pos += 8) features[i] = buf.readDoubleLE(pos);
  let labels: Uint8Array | null = null;
  if (hasLabels === 1) {
    labels = Uint8Array.from(buf.subarray(pos, pos + n));
    pos += n;
  }
  const nameLen = buf.readUInt32LE(pos);
  const name = buf.subarray(pos + 4, pos + 4 + nameLen).toString("utf-8");
  return { nodeCount: n, edges: pairs, features, featureDim: d, labels, name };
}
