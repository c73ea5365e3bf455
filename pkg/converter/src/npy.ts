/** Minimal readers for .npy arrays and .npz archives (zip of .npy).
 *
 * Covers what numpy's savez/savez_compressed actually emit: versions 1.0
 * and 2.0 headers, little-endian numeric dtypes, stored or deflated zip
 * entries. Anything else fails with a located error.
 */

import * as zlib from "node:zlib";
import { ConvertError } from "./errors.js";
import { DenseMatrix, dense, fromColumnMajor } from "./arrays.js";

const NPY_MAGIC = Buffer.from("\x93NUMPY", "latin1");

interface NpyHeader {
  descr: string;
  fortranOrder: boolean;
  shape: number[];
}

function parseHeaderText(text: string, where: string): NpyHeader {
  const descr = /'descr'\s*:\s*'([^']+)'/.exec(text);
  const fortran = /'fortran_order'\s*:\s*(True|False)/.exec(text);
  const shape = /'shape'\s*:\s*\(([^)]*)\)/.exec(text);
  if (!descr || !fortran || !shape) {
    throw new ConvertError(`${where}: unparseable .npy header: ${text.trim()}`);
  }
  const dims = shape[1].split(",").map((s) => s.trim()).filter((s) => s.length > 0)
    .map((s) => Number.parseInt(s, 10));
  return { descr: descr[1], fortranOrder: fortran[1] === "True", shape: dims };
}

type Reader = (view: DataView, byteOffset: number) => number;

function readerFor(descr: string, where: string): { read: Reader; size: number } {
  switch (descr) {
    case "<f8": return { read: (v, o) => v.getFloat64(o, true), size: 8 };
    case "<f4": return { read: (v, o) => v.getFloat32(o, true), size: 4 };
    case "<i8": return { read: (v, o) => Number(v.getBigInt64(o, true)), size: 8 };
    case "<i4": return { read: (v, o) => v.getInt32(o, true), size: 4 };
    case "<i2": return { read: (v, o) => v.getInt16(o, true), size: 2 };
    case "|i1": case "<i1": return { read: (v, o) => v.getInt8(o), size: 1 };
    case "<u8": return { read: (v, o) => Number(v.getBigUint64(o, true)), size: 8 };
    case "<u4": return { read: (v, o) => v.getUint32(o, true), size: 4 };
    case "<u2": return { read: (v, o) => v.getUint16(o, true), size: 2 };
    case "|u1": case "<u1": return { read: (v, o) => v.getUint8(o), size: 1 };
    case "|b1": return { read: (v, o) => (v.getUint8(o) ? 1 : 0), size: 1 };
    default:
      throw new ConvertError(`${where}: unsupported dtype ${descr}`);
  }
}

export function parseNpy(buf: Buffer, where: string): DenseMatrix {
  if (buf.length < 10 || !buf.subarray(0, 6).equals(NPY_MAGIC)) {
    throw new ConvertError(`${where}: not a .npy array (bad magic)`);
  }
  const major = buf[6];
  let headerLen: number;
  let dataStart: number;
  if (major === 1) {
    headerLen = buf.readUInt16LE(8);
    dataStart = 10 + headerLen;
  } else if (major === 2 || major === 3) {
    headerLen = buf.readUInt32LE(8);
    dataStart = 12 + headerLen;
  } else {
    throw new ConvertError(`${where}: unsupported .npy version ${major}`);
  }
  const header = parseHeaderText(buf.subarray(dataStart - headerLen, dataStart).toString("latin1"), where);
  if (header.shape.length > 2) {
    throw new ConvertError(`${where}: expected 1-D or 2-D array, got shape (${header.shape.join(", ")})`);
  }
  const rows = header.shape.length === 0 ? 1 : header.shape[0];
  const cols = header.shape.length === 2 ? header.shape[1] : 1;
  const { read, size } = readerFor(header.descr, where);
  const count = rows * cols;
  if (dataStart + count * size > buf.length) {
    throw new ConvertError(`${where}: truncated .npy payload`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset + dataStart, count * size);
  const out = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    out[i] = read(view, i * size);
  }
  if (header.fortranOrder && rows > 1 && cols > 1) {
    return fromColumnMajor(rows, cols, out);
  }
  return dense(rows, cols, out);
}

// -- zip container -----------------------------------------------------------

const EOCD_SIG = 0x06054b50;
const CENTRAL_SIG = 0x02014b50;
const LOCAL_SIG = 0x04034b50;

export function parseNpz(buf: Buffer, where: string): Map<string, DenseMatrix> {
  let eocd = -1;
  const lo = Math.max(0, buf.length - 65557);
  for (let i = buf.length - 22; i >= lo; i--) {
    if (buf.readUInt32LE(i) === EOCD_SIG) {
      eocd = i;
      break;
    }
  }
  if (eocd < 0) {
    throw new ConvertError(`${where}: not a zip archive (no end-of-central-directory)`);
  }
  const count = buf.readUInt16LE(eocd + 10);
  let pos = buf.readUInt32LE(eocd + 16);
  const out = new Map<string, DenseMatrix>();
  for (let e = 0; e < count; e++) {
    if (buf.readUInt32LE(pos) !== CENTRAL_SIG) {
      throw new ConvertError(`${where}: corrupt central directory at entry ${e}`);
    }
    const method = buf.readUInt16LE(pos + 10);
    const compressedSize = buf.readUInt32LE(pos + 20);
    const nameLen = buf.readUInt16LE(pos + 28);
    const extraLen = buf.readUInt16LE(pos + 30);
    const commentLen = buf.readUInt16LE(pos + 32);
    const localOffset = buf.readUInt32LE(pos + 42);
    const name = buf.subarray(pos + 46, pos + 46 + nameLen).toString("utf-8");
    if (compressedSize === 0xffffffff || localOffset === 0xffffffff) {
      throw new ConvertError(`${where}: zip64 entries are not supported (${name})`);
    }
    if (buf.readUInt32LE(localOffset) !== LOCAL_SIG) {
      throw new ConvertError(`${where}: bad local header for ${name}`);
    }
    const localNameLen = buf.readUInt16LE(localOffset + 26);
    const localExtraLen = buf.readUInt16LE(localOffset + 28);
    const dataStart = localOffset + 30 + localNameLen + localExtraLen;
    const raw = buf.subarray(dataStart, dataStart + compressedSize);
    let payload: Buffer;
    if (method === 0) {
      payload = raw;
    } else if (method === 8) {
      payload = zlib.inflateRawSync(raw);
    } else {
      throw new ConvertError(`${where}: unsupported zip compression method ${method} (${name})`);
    }
    const key = name.endsWith(".npy") ? name.slice(0, -4) : name;
    out.set(key, parseNpy(payload, `${where}:${name}`));
    pos += 46 + nameLen + extraLen + commentLen;
  }
  return out;
}
