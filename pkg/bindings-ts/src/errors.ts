/** Typed errors mirroring the core CLI's exit-code categories. */

export class AakitError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Bad flags or parameter values (CLI exit code 2). */
export class ParameterError extends AakitError {}

/** IO or file-format problems (CLI exit code 3). */
export class IoFormatError extends AakitError {}

/** Numeric failure inside the solver (CLI exit code 4). */
export class NumericError extends AakitError {}

export function errorForExit(code: number | null, stderr: string): AakitError {
  const msg = stderr.trim() || `aakit exited with code ${code}`;
  switch (code) {
    case 2:
      return new ParameterError(msg);
    case 3:
      return new IoFormatError(msg);
    case 4:
      return new NumericError(msg);
    default:
      return new AakitError(msg);
  }
}
