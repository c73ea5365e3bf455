#!/usr/bin/env node
/** gad-convert: one-shot conversion of public GAD benchmark bundles into
 * the canonical GADG format, plus re-export of a GADG back to CSV.
 *
 *   gad-convert --format mat_bundle --adj Network --feat Attributes \
 *               --label Label in.mat out.gadg
 *   gad-convert --format array_archive --adj adj --feat features in.npz out.gadg
 *   gad-convert --format edgelist_csv --feat features.csv \
 *               [--label labels.csv] edges.csv out.gadg
 *   gad-convert export-edgelist in.gadg --edges out_edges.csv \
 *               --features out_features.csv [--labels out_labels.csv]
 *
 * Exit codes: 0 ok, 2 usage error, 3 validation/data error.
 */

import { ConvertError, UsageError } from "./errors.js";
import { SourceDescriptor, SourceFormat, convert } from "./convert.js";
import { readGadg } from "./gadg.js";
import { writeEdgesCsv, writeFeaturesCsv, writeLabelsCsv } from "./csv.js";

interface Parsed {
  flags: Map<string, string>;
  positional: string[];
}

function parseArgs(argv: string[]): Parsed {
  const flags = new Map<string, string>();
  const positional: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg.startsWith("--")) {
      const value = argv[i + 1];
      if (value === undefined) {
        throw new UsageError(`flag ${arg} needs a value`);
      }
      flags.set(arg.slice(2), value);
      i++;
    } else {
      positional.push(arg);
    }
  }
  return { flags, positional };
}

function runConvert(parsed: Parsed): number {
  const format = parsed.flags.get("format");
  if (!format) {
    throw new UsageError("--format is required (mat_bundle | array_archive | edgelist_csv)");
  }
  if (!["mat_bundle", "array_archive", "edgelist_csv"].includes(format)) {
    throw new UsageError(`unknown format '${format}'`);
  }
  if (parsed.positional.length !== 2) {
    throw new UsageError("expected exactly: <input> <output.gadg>");
  }
  const desc: SourceDescriptor = {
    format: format as SourceFormat,
    input: parsed.positional[0],
    output: parsed.positional[1],
    adjKey: parsed.flags.get("adj"),
    featKey: parsed.flags.get("feat"),
    labelKey: parsed.flags.get("label"),
  };
  const stats = convert(desc);
  console.log(JSON.stringify({
    written: desc.output, n: stats.n, m: stats.m, d: stats.d, anomalies: stats.anomalies,
  }));
  return 0;
}

function runExport(parsed: Parsed): number {
  if (parsed.positional.length !== 1) {
    throw new UsageError("expected exactly: export-edgelist <input.gadg>");
  }
  const edgesOut = parsed.flags.get("edges");
  const featuresOut = parsed.flags.get("features");
  if (!edgesOut || !featuresOut) {
    throw new UsageError("export-edgelist needs --edges and --features output paths");
  }
  const g = readGadg(parsed.positional[0]);
  writeEdgesCsv(edgesOut, g.edges);
  writeFeaturesCsv(featuresOut, g.features, g.featureDim);
  const labelsOut = parsed.flags.get("labels");
  if (labelsOut) {
    if (!g.labels) {
      throw new ConvertError(`${parsed.positional[0]}: graph has no labels to export`);
    }
    writeLabelsCsv(labelsOut, g.labels);
  }
  console.log(JSON.stringify({ edges: edgesOut, features: featuresOut, m: g.edges.length }));
  return 0;
}

export function main(argv: string[]): number {
  try {
    if (argv[0] === "export-edgelist") {
      return runExport(parseArgs(argv.slice(1)));
    }
    return runConvert(parseArgs(argv));
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`usage error: ${err.message}`);
      return 2;
    }
    if (err instanceof ConvertError) {
      console.error(`validation error: ${err.message}`);
      return 3;
    }
    if (err instanceof Error && "code" in err && typeof err.code === "string") {
      console.error(`io error: ${err.message}`);
      return 3;
    }
    throw err;
  }
}

const invokedDirectly = process.argv[1] !== undefined
  && import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
