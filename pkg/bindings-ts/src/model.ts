/** Fitted-model handle backed by the toolkit's JSON model format.
 *
 * The handle keeps the parsed document; accessors materialize A, B, Z, and
 * the history as native arrays. Saving re-serializes the document, which
 * preserves every stored double exactly (JSON round-trips IEEE doubles).
 */

import { readFileSync, writeFileSync } from "node:fs";

import { IoFormatError } from "./errors.js";
import { Matrix } from "./matrix.js";

const MODEL_FORMAT = "aakit-model";
const MODEL_VERSION = 1;

type SparseColumn = [number, number][];

interface ModelDoc {
  format: string;
  version: number;
  dims: { m: number; n: number; p: number };
  config: Record<string, unknown>;
  converged: boolean;
  degenerate: boolean;
  history: number[];
  B: SparseColumn[];
  A: SparseColumn[];
  Z: number[][];
  weights?: number[];
}

function denseFromSparse(cols: SparseColumn[], nrows: number): Matrix {
  const M = new Matrix(nrows, cols.length);
  for (let j = 0; j < cols.length; j++) {
    for (const [i, v] of cols[j]!) M.set(i, j, v);
  }
  return M;
}

export class ModelHandle {
  private readonly doc: ModelDoc;

  private constructor(doc: ModelDoc) {
    this.doc = doc;
  }

  static fromJson(text: string, source = "model"): ModelHandle {
    let doc: ModelDoc;
    try {
      doc = JSON.parse(text) as ModelDoc;
    } catch (exc) {
      throw new IoFormatError(`${source}: invalid model file: ${String(exc)}`);
    }
    if (doc.format !== MODEL_FORMAT) {
      throw new IoFormatError(`${source}: not a model file`);
    }
    if (doc.version !== MODEL_VERSION) {
      throw new IoFormatError(
        `${source}: unsupported model version ${doc.version}`);
    }
    return new ModelHandle(doc);
  }

  static load(path: string): ModelHandle {
    return ModelHandle.fromJson(readFileSync(path, "utf-8"), path);
  }

  save(path: string): void {
    writeFileSync(path, JSON.stringify(this.doc, null, 1) + "\n");
  }

  get dims(): { m: number; n: number; p: number } {
    return { ...this.doc.dims };
  }

  get config(): Record<string, unknown> {
    return { ...this.doc.config };
  }

  get converged(): boolean {
    return this.doc.converged;
  }

  get degenerate(): boolean {
    return this.doc.degenerate;
  }

  /** Objective value after initialization and after each iteration. */
  get history(): number[] {
    return [...this.doc.history];
  }

  /** p x n codes: simplex coefficients of each data point. */
  get A(): Matrix {
    return denseFromSparse(this.doc.A, this.doc.dims.p);
  }

  /** n x p archetype compositions: simplex weights over data points. */
  get B(): Matrix {
    return denseFromSparse(this.doc.B, this.doc.dims.n);
  }

  /** m x p archetypes, Z = X B. */
  get Z(): Matrix {
    return Matrix.fromColumns(this.doc.Z);
  }

  /** Per-point robust weights (robust fits only). */
  get weights(): number[] | null {
    return this.doc.weights ? [...this.doc.weights] : null;
  }
}
