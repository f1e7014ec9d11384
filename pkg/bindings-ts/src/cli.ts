/** Subprocess plumbing: every operation goes through the aakit CLI so the
 * bindings share one numerical implementation with the core package. */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { AakitError, errorForExit } from "./errors.js";

/** Resolve the core executable; override with AAKIT_BIN if the CLI is not
 * on PATH. */
export function aakitBinary(): string {
  return process.env["AAKIT_BIN"] ?? "aakit";
}

export function runCli(args: string[]): string {
  const res = spawnSync(aakitBinary(), args, {
    encoding: "utf-8",
    maxBuffer: 1 << 28,
  });
  if (res.error) {
    throw new AakitError(`failed to launch ${aakitBinary()}: ${res.error.message}`);
  }
  if (res.status !== 0) {
    throw errorForExit(res.status, res.stderr ?? "");
  }
  return res.stdout ?? "";
}

/** Run fn with a private temp directory that is removed afterwards. */
export function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "aakit-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
