/**
 * Caller-owned array views.
 *
 * An ArrayView wraps a contiguous float32 or float64 buffer with an
 * (n, d) shape. Contiguous input is read in place (no copy); a view
 * whose row stride exceeds the row length is copied once, with a
 * warning, before serialization.
 */

export type FloatArray = Float32Array | Float64Array;

export interface ArrayView {
  data: FloatArray;
  /** rows, columns */
  shape: [number, number];
  /** elements between row starts; defaults to shape[1] (contiguous) */
  rowStride?: number;
}

export type MatrixLike = ArrayView | number[][];

function isArrayView(value: MatrixLike): value is ArrayView {
  return (
    typeof value === "object" &&
    value !== null &&
    "data" in value &&
    "shape" in value
  );
}

/** Build a view over a contiguous (n, d) buffer. */
export function view(data: FloatArray, rows: number, cols: number): ArrayView {
  if (rows * cols !== data.length) {
    throw new RangeError(
      `buffer of length ${data.length} cannot be viewed as ${rows}x${cols}`,
    );
  }
  return { data, shape: [rows, cols] };
}

/** Row extraction without copying for contiguous views. */
export function rowOf(v: ArrayView, index: number): FloatArray {
  const [rows, cols] = v.shape;
  const stride = v.rowStride ?? cols;
  if (index < 0 || index >= rows) {
    throw new RangeError(`row ${index} outside 0..${rows - 1}`);
  }
  return v.data.subarray(index * stride, index * stride + cols);
}

let warnedAboutCopy = false;

/** Rows as plain number arrays, ready for JSON. Zero-copy reads for
 * contiguous layouts; strided layouts are copied once with a warning. */
export function toRows(value: MatrixLike): number[][] {
  if (!isArrayView(value)) {
    if (!Array.isArray(value) || value.some((row) => !Array.isArray(row))) {
      throw new TypeError("expected an ArrayView or number[][]");
    }
    return value;
  }
  const [rows, cols] = value.shape;
  const stride = value.rowStride ?? cols;
  if (stride < cols) {
    throw new RangeError(`row stride ${stride} below row length ${cols}`);
  }
  const needed = rows === 0 ? 0 : (rows - 1) * stride + cols;
  if (needed > value.data.length) {
    throw new RangeError(
      `view ${rows}x${cols} (stride ${stride}) overruns buffer of length ${value.data.length}`,
    );
  }
  if (stride !== cols && !warnedAboutCopy) {
    warnedAboutCopy = true;
    console.warn(
      "triplegak-bindings: non-contiguous view; copying rows before serialization",
    );
  }
  const out: number[][] = new Array(rows);
  for (let i = 0; i < rows; i++) {
    out[i] = Array.from(value.data.subarray(i * stride, i * stride + cols));
  }
  return out;
}

/** 1-d convenience: a single vector as numbers. */
export function toVector(value: FloatArray | number[]): number[] {
  if (Array.isArray(value)) return value;
  return Array.from(value);
}
