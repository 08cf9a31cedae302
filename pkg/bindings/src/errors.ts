/** Structured error mirroring the CLI's taxonomy. */
export class BindingError extends Error {
  /** Stable code: invalid-input, bad-magic, bad-version, truncated,
   *  non-finite, trailing-data, io-error, internal. */
  readonly code: string;
  /** CLI exit code when the error came from a subprocess, else null. */
  readonly exitCode: number | null;

  constructor(code: string, message: string, exitCode: number | null = null) {
    super(message);
    this.name = "BindingError";
    this.code = code;
    this.exitCode = exitCode;
  }
}

export function invalidInput(message: string): BindingError {
  return new BindingError("invalid-input", message);
}
