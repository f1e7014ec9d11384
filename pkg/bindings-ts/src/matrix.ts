/** Dense float64 matrix with column-major storage, plus the binary
 * matrix-file format shared with the core toolkit.
 *
 * File layout: magic "AAMX" (4 bytes), version u32 LE, rows u64 LE,
 * cols u64 LE, then rows*cols float64 LE values in column-major order.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { IoFormatError } from "./errors.js";

const MAGIC = "AAMX";
const VERSION = 1;
const HEADER_BYTES = 24;

export class Matrix {
  readonly rows: number;
  readonly cols: number;
  /** Column-major values, length rows*cols. */
  readonly data: Float64Array;

  constructor(rows: number, cols: number, data?: Float64Array) {
    if (!Number.isInteger(rows) || !Number.isInteger(cols) || rows < 0 || cols < 0) {
      throw new IoFormatError(`invalid matrix shape ${rows}x${cols}`);
    }
    this.rows = rows;
    this.cols = cols;
    if (data === undefined) {
      this.data = new Float64Array(rows * cols);
    } else {
      if (data.length !== rows * cols) {
        throw new IoFormatError(
          `data length ${data.length} does not match shape ${rows}x${cols}`);
      }
      this.data = data;
    }
  }

  get(i: number, j: number): number {
    return this.data[j * this.rows + i]!;
  }

  set(i: number, j: number, v: number): void {
    this.data[j * this.rows + i] = v;
  }

  column(j: number): Float64Array {
    return this.data.subarray(j * this.rows, (j + 1) * this.rows);
  }

  /** Row-major nested arrays (convenience accessor; copies). */
  toArray(): number[][] {
    const out: number[][] = [];
    for (let i = 0; i < this.rows; i++) {
      const row: number[] = [];
      for (let j = 0; j < this.cols; j++) row.push(this.get(i, j));
      out.push(row);
    }
    return out;
  }

  /** Build from column vectors (already column-major: no transpose). */
  static fromColumns(columns: readonly (readonly number[])[]): Matrix {
    const cols = columns.length;
    const rows = cols === 0 ? 0 : columns[0]!.length;
    const M = new Matrix(rows, cols);
    for (let j = 0; j < cols; j++) {
      const col = columns[j]!;
      if (col.length !== rows) {
        throw new IoFormatError(`ragged column ${j}: ${col.length} vs ${rows}`);
      }
      for (let i = 0; i < rows; i++) M.set(i, j, col[i]!);
    }
    return M;
  }

  /** Build from row-major nested arrays; performs an explicit transposing
   * copy into column-major storage. */
  static fromRowMajor(values: readonly (readonly number[])[]): Matrix {
    const rows = values.length;
    const cols = rows === 0 ? 0 : values[0]!.length;
    const M = new Matrix(rows, cols);
    for (let i = 0; i < rows; i++) {
      const row = values[i]!;
      if (row.length !== cols) {
        throw new IoFormatError(`ragged row ${i}: ${row.length} vs ${cols}`);
      }
      for (let j = 0; j < cols; j++) M.set(i, j, row[j]!);
    }
    return M;
  }
}

export function saveMatrix(path: string, M: Matrix): void {
  const buf = Buffer.alloc(HEADER_BYTES + 8 * M.rows * M.cols);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(VERSION, 4);
  buf.writeBigUInt64LE(BigInt(M.rows), 8);
  buf.writeBigUInt64LE(BigInt(M.cols), 16);
  for (let k = 0; k < M.data.length; k++) {
    buf.writeDoubleLE(M.data[k]!, HEADER_BYTES + 8 * k);
  }
  writeFileSync(path, buf);
}

export function loadMatrix(path: string): Matrix {
  const buf = readFileSync(path);
  if (buf.length < HEADER_BYTES || buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new IoFormatError(`${path}: not a matrix file (bad magic)`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) {
    throw new IoFormatError(`${path}: unsupported matrix version ${version}`);
  }
  const rows = Number(buf.readBigUInt64LE(8));
  const cols = Number(buf.readBigUInt64LE(16));
  const expected = HEADER_BYTES + 8 * rows * cols;
  if (buf.length !== expected) {
    throw new IoFormatError(
      `${path}: payload length mismatch (${buf.length} vs ${expected} bytes)`);
  }
  const data = new Float64Array(rows * cols);
  for (let k = 0; k < data.length; k++) {
    const v = buf.readDoubleLE(HEADER_BYTES + 8 * k);
    if (!Number.isFinite(v)) {
      throw new IoFormatError(`${path}: non-finite values in payload`);
    }
    data[k] = v;
  }
  return new Matrix(rows, cols, data);
}
