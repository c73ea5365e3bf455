/** Source descriptors and the conversion pipeline itself. */

import * as fs from "node:fs";
import * as path from "node:path";
import { ConvertError } from "./errors.js";
import { SourceArray, asVector } from "./arrays.js";
import { parseMat } from "./matfile.js";
import { parseNpz } from "./npy.js";
import { readEdgesCsv, readFeaturesCsv, readLabelsCsv } from "./csv.js";
import { GadgGraph, canonicalEdges, writeGadg } from "./gadg.js";

export type SourceFormat = "mat_bundle" | "array_archive" | "edgelist_csv";

export interface SourceDescriptor {
  format: SourceFormat;
  /** mat_bundle / array_archive: variable names; edgelist_csv: `input` is
   * the edge CSV and `featKey`/`labelKey` are file paths. */
  input: string;
  adjKey?: string;
  featKey?: string;
  labelKey?: string;
  output: string;
}

export interface ConversionStats {
  n: number;
  m: number;
  d: number;
  anomalies: number | null;
}

function requireKey(arrays: Map<string, SourceArray>, key: string | undefined,
                    what: string, input: string): SourceArray {
  if (!key) {
    throw new ConvertError(`${input}: no ${what} key given (use --${what === "adjacency" ? "adj" : what})`);
  }
  const found = arrays.get(key);
  if (!found) {
    const names = Array.from(arrays.keys()).join(", ") || "(none)";
    throw new ConvertError(`${input}: missing key '${key}' for ${what}; available: ${names}`);
  }
  return found;
}

function adjacencyToEdges(adj: SourceArray, input: string, key: string): Array<[number, number]> {
  if (adj.rows !== adj.cols) {
    throw new ConvertError(
      `${input}: adjacency '${key}' has shape ${adj.rows}x${adj.cols} (not square)`);
  }
  const pairs: Array<[number, number]> = [];
  if (adj.kind === "sparse") {
    for (let col = 0; col < adj.cols; col++) {
      for (let k = adj.indptr[col]; k < adj.indptr[col + 1]; k++) {
        if (adj.values[k] !== 0) {
          pairs.push([adj.indices[k], col]);
        }
      }
    }
  } else {
    for (let i = 0; i < adj.rows; i++) {
      for (let j = 0; j < adj.cols; j++) {
        if (adj.data[i * adj.cols + j] !== 0) {
          pairs.push([i, j]);
        }
      }
    }
  }
  return pairs;
}

function labelsFromVector(vec: Float64Array, n: number, input: string, key: string): Uint8Array {
  if (vec.length !== n) {
    throw new ConvertError(`${input}: label vector '${key}' has ${vec.length} entries for ${n} nodes`);
  }
  const out = new Uint8Array(n);
  for (let i = 0; i < n; i++) {
    if (vec[i] !== 0 && vec[i] !== 1) {
      throw new ConvertError(`${input}: label '${key}'[${i}] = ${vec[i]}, expected 0/1`);
    }
    out[i] = vec[i];
  }
  return out;
}

function fromArrayBundle(desc: SourceDescriptor,
                         arrays: Map<string, SourceArray>): GadgGraph {
  const adj = requireKey(arrays, desc.adjKey, "adjacency", desc.input);
  const featArray = requireKey(arrays, desc.featKey, "feat", desc.input);
  if (featArray.kind === "sparse") {
    throw new ConvertError(`${desc.input}: sparse feature matrices are not supported; densify '${desc.featKey}' first`);
  }
  const n = featArray.rows;
  if (adj.rows !== adj.cols) {
    throw new ConvertError(
      `${desc.input}: adjacency '${desc.adjKey}' has shape ${adj.rows}x${adj.cols} (not square)`);
  }
  if (adj.rows !== n) {
    throw new ConvertError(
      `${desc.input}: adjacency is ${adj.rows}x${adj.cols} but features hold ${n} rows`);
  }
  const rawPairs = adjacencyToEdges(adj, desc.input, desc.adjKey as string);
  const edges = canonicalEdges(rawPairs, n, desc.input);
  let labels: Uint8Array | null = null;
  if (desc.labelKey) {
    const labelArray = requireKey(arrays, desc.labelKey, "label", desc.input);
    labels = labelsFromVector(asVector(labelArray, `${desc.input}:${desc.labelKey}`),
                              n, desc.input, desc.labelKey);
  }
  return {
    nodeCount: n,
    edges,
    features: featArray.data,
    featureDim: featArray.cols,
    labels,
    name: path.basename(desc.input).replace(/\.(mat|npz)$/i, ""),
  };
}

function fromEdgelistCsv(desc: SourceDescriptor): GadgGraph {
  if (!desc.featKey) {
    throw new ConvertError(`${desc.input}: edgelist_csv needs --feat <features.csv>`);
  }
  const features = readFeaturesCsv(desc.featKey);
  const n = features.ids.length;
  features.ids.forEach((id, row) => {
    if (id !== row) {
      throw new ConvertError(`${desc.featKey}: row ${row + 2} has node_id ${id}, expected ${row}`);
    }
  });
  const rawPairs = readEdgesCsv(desc.input);
  const edges = canonicalEdges(rawPairs, n, desc.input);
  const labels = desc.labelKey ? readLabelsCsv(desc.labelKey, n) : null;
  return {
    nodeCount: n,
    edges,
    features: features.data,
    featureDim: features.dim,
    labels,
    name: path.basename(desc.input).replace(/\.csv$/i, ""),
  };
}

export function convert(desc: SourceDescriptor): ConversionStats {
  let graph: GadgGraph;
  if (desc.format === "edgelist_csv") {
    graph = fromEdgelistCsv(desc);
  } else {
    const raw = fs.readFileSync(desc.input);
    const arrays = desc.format === "mat_bundle"
      ? parseMat(raw, desc.input)
      : parseNpz(raw, desc.input);
    graph = fromArrayBundle(desc, arrays);
  }
  writeGadg(desc.output, graph);
  return {
    n: graph.nodeCount,
    m: graph.edges.length,
    d: graph.featureDim,
    anomalies: graph.labels ? graph.labels.reduce((s, v) => s + v, 0) : null,
  };
}
