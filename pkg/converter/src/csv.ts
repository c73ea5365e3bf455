/** Edge-list / feature / label CSV reading and writing.
 *
 * The column layout matches the primary pipeline's CSV exports so the
 * two tools round-trip each other:
 *   edges:    "src,dst" header then one undirected edge per row
 *   features: "node_id,f0,...,f{d-1}"
 *   labels:   "node_id,label"
 */

import * as fs from "node:fs";
import { ConvertError } from "./errors.js";

export function readEdgesCsv(path: string): Array<[number, number]> {
  const lines = fs.readFileSync(path, "utf-8").trim().split(/\r?\n/);
  if (lines.length === 0 || lines[0] !== "src,dst") {
    throw new ConvertError(`${path}: expected header 'src,dst'`);
  }
  const out: Array<[number, number]> = [];
  for (let i = 1; i < lines.length; i++) {
    if (lines[i] === "") continue;
    const parts = lines[i].split(",");
    if (parts.length !== 2) {
      throw new ConvertError(`${path}:${i + 1}: expected 'src,dst', got '${lines[i]}'`);
    }
    const a = Number(parts[0]);
    const b = Number(parts[1]);
    if (!Number.isInteger(a) || !Number.isInteger(b)) {
      throw new ConvertError(`${path}:${i + 1}: non-integer node id`);
    }
    out.push([a, b]);
  }
  return out;
}

export function readFeaturesCsv(path: string): { ids: number[]; dim: number; data: Float64Array } {
  const lines = fs.readFileSync(path, "utf-8").trim().split(/\r?\n/);
  if (lines.length < 2 || !lines[0].startsWith("node_id,")) {
    throw new ConvertError(`${path}: expected 'node_id,f0,...' header and at least one row`);
  }
  const dim = lines[0].split(",").length - 1;
  const rows = lines.length - 1;
  const ids: number[] = [];
  const data = new Float64Array(rows * dim);
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== dim + 1) {
      throw new ConvertError(`${path}:${i + 1}: expected ${dim + 1} columns, got ${parts.length}`);
    }
    ids.push(Number(parts[0]));
    for (let j = 0; j < dim; j++) {
      const v = Number(parts[j + 1]);
      if (!Number.isFinite(v)) {
        throw new ConvertError(`${path}:${i + 1}: non-finite feature in column f${j}`);
      }
      data[(i - 1) * dim + j] = v;
    }
  }
  return { ids, dim, data };
}

export function readLabelsCsv(path: string, nodeCount: number): Uint8Array {
  const lines = fs.readFileSync(path, "utf-8").trim().split(/\r?\n/);
  if (lines.length === 0 || lines[0] !== "node_id,label") {
    throw new ConvertError(`${path}: expected header 'node_id,label'`);
  }
  const out = new Uint8Array(nodeCount);
  const seen = new Set<number>();
  for (let i = 1; i < lines.length; i++) {
    const [idText, labelText] = lines[i].split(",");
    const id = Number(idText);
    const label = Number(labelText);
    if (!Number.isInteger(id) || id < 0 || id >= nodeCount) {
      throw new ConvertError(`${path}:${i + 1}: node id ${idText} outside [0, ${nodeCount})`);
    }
    if (label !== 0 && label !== 1) {
      throw new ConvertError(`${path}:${i + 1}: label must be 0 or 1, got ${labelText}`);
    }
    seen.add(id);
    out[id] = label;
  }
  if (seen.size !== nodeCount) {
    throw new ConvertError(`${path}: ${seen.size} labeled rows for ${nodeCount} nodes`);
  }
  return out;
}

export function writeEdgesCsv(path: string, edges: Array<[number, number]>): void {
  const lines = ["src,dst", ...edges.map(([a, b]) => `${a},${b}`)];
  fs.writeFileSync(path, lines.join("\n") + "\n");
}

export function writeFeaturesCsv(path: string, features: Float64Array, dim: number): void {
  const rows = features.length / dim;
  const header = "node_id," + Array.from({ length: dim }, (_, j) => `f${j}`).join(",");
  const lines = [header];
  for (let i = 0; i < rows; i++) {
    const vals = Array.from(features.subarray(i * dim, (i + 1) * dim), (v) => formatFloat(v));
    lines.push(`${i},${vals.join(",")}`);
  }
  fs.writeFileSync(path, lines.join("\n") + "\n");
}

export function writeLabelsCsv(path: string, labels: Uint8Array): void {
  const lines = ["node_id,label", ...Array.from(labels, (v, i) => `${i},${v}`)];
  fs.writeFileSync(path, lines.join("\n") + "\n");
}

/** Shortest decimal that round-trips, matching Python's repr(float). */
export function formatFloat(v: number): string {
  if (Number.isInteger(v) && Math.abs(v) < 1e16) {
    return `${v}.0`;
  }
  return String(v);
}
