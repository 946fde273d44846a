/** Error raised for any failure reported by the backing process. */
export class TripleGakError extends Error {
  /** Stable error code from the backing implementation. */
  readonly code: string;

  constructor(code: string, message: string) {
    super(message);
    this.name = "TripleGakError";
    this.code = code;
  }
}
