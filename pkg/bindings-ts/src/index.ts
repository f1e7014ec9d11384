/** TypeScript bindings for the archetypal-analysis toolkit.
 *
 * Every operation shells out to the `aakit` CLI and exchanges data through
 * the toolkit's file formats, so results are numerically identical to the
 * core package by construction. Matrices cross the boundary as contiguous
 * column-major float64 buffers; use Matrix.fromRowMajor for row-major data
 * (explicit transposing copy).
 */

import { join } from "node:path";

import { runCli, withTempDir } from "./cli.js";
import { Matrix, loadMatrix, saveMatrix } from "./matrix.js";
import { ModelHandle } from "./model.js";

export { Matrix, loadMatrix, saveMatrix } from "./matrix.js";
export { ModelHandle } from "./model.js";
export { AakitError, IoFormatError, NumericError, ParameterError } from "./errors.js";
export { aakitBinary } from "./cli.js";

export interface FitOptions {
  /** Outer block-coordinate iterations (default 100). */
  iterations?: number;
  seed?: number;
  tol?: number;
  /** Huber knee for robust fits (default 0.01). */
  epsilon?: number;
  threads?: number;
}

function fitArgs(inputPath: string, modelPath: string, p: number,
                 options: FitOptions, robust: boolean): string[] {
  const args = ["fit", "--input", inputPath, "-p", String(p),
                "--output-model", modelPath];
  if (robust) args.push("--robust");
  if (options.iterations !== undefined) args.push("-t", String(options.iterations));
  if (options.seed !== undefined) args.push("--seed", String(options.seed));
  if (options.tol !== undefined) args.push("--tol", String(options.tol));
  if (options.epsilon !== undefined) args.push("--epsilon", String(options.epsilon));
  if (options.threads !== undefined) args.push("--threads", String(options.threads));
  return args;
}

function runFit(X: Matrix, p: number, options: FitOptions,
                robust: boolean): ModelHandle {
  return withTempDir((dir) => {
    const inputPath = join(dir, "input.aamx");
    const modelPath = join(dir, "model.json");
    saveMatrix(inputPath, X);
    runCli(fitArgs(inputPath, modelPath, p, options, robust));
    return ModelHandle.load(modelPath);
  });
}

/** Fit p archetypes to the m x n data matrix X (columns are points). */
export function fit(X: Matrix, p: number, options: FitOptions = {}): ModelHandle {
  return runFit(X, p, options, false);
}

/** Huber-robust fit; epsilon sets the knee between quadratic and linear
 * penalties on per-point residual norms. */
export function fitRobust(X: Matrix, p: number,
                          options: FitOptions = {}): ModelHandle {
  return runFit(X, p, options, true);
}

/** Code new data against a fitted model's archetypes: returns the p x n
 * matrix of simplex coefficients. */
export function encode(model: ModelHandle, X: Matrix, threads?: number): Matrix {
  return withTempDir((dir) => {
    const modelPath = join(dir, "model.json");
    const inputPath = join(dir, "input.aamx");
    const codesPath = join(dir, "codes.aamx");
    model.save(modelPath);
    saveMatrix(inputPath, X);
    const args = ["encode", "--model", modelPath, "--input", inputPath,
                  "--output-codes", codesPath];
    if (threads !== undefined) args.push("--threads", String(threads));
    runCli(args);
    return loadMatrix(codesPath);
  });
}

export interface ClassifyResult {
  labels: string[];
  /** Squared distance from each test point to each class's archetype hull,
   * rows ordered like the input class list. */
  residuals: Matrix;
}

/** Label test points by nearest archetype hull over a set of per-class
 * fitted models. */
export function classify(classes: ReadonlyArray<{ label: string; model: ModelHandle }>,
                         X: Matrix): ClassifyResult {
  return withTempDir((dir) => {
    const args = ["classify"];
    classes.forEach(({ label, model }, k) => {
      const path = join(dir, `class${k}.json`);
      model.save(path);
      args.push("--model", `${label}=${path}`);
    });
    const testPath = join(dir, "test.aamx");
    saveMatrix(testPath, X);
    args.push("--test", testPath);
    const out = runCli(args);
    const labels: string[] = [];
    const residualRows: number[][] = [];
    for (const line of out.trim().split("\n")) {
      const parts = line.split("\t");
      labels.push(parts[0]!);
      residualRows.push(parts.slice(1).map(Number));
    }
    // stdout has one row per test point with one residual per class;
    // transpose into classes x points to mirror the core's layout
    return {
      labels,
      residuals: Matrix.fromColumns(residualRows),
    };
  });
}

/** Load a saved model file. */
export function loadModel(path: string): ModelHandle {
  return ModelHandle.load(path);
}

/** Save a model handle; the written file loads in the core CLI. */
export function saveModel(path: string, model: ModelHandle): void {
  model.save(path);
}
