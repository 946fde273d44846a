import { afterEach, describe, expect, it, vi } from "vitest";

import { rowOf, toRows, view } from "../src/arrays.js";

describe("view", () => {
  it("rejects shape/buffer disagreement", () => {
    expect(() => view(new Float64Array(5), 2, 3)).toThrow(RangeError);
  });

  it("rowOf reads in place", () => {
    const data = new Float64Array([1, 2, 3, 4, 5, 6]);
    const v = view(data, 2, 3);
    const row = rowOf(v, 1);
    expect(Array.from(row)).toEqual([4, 5, 6]);
    data[4] = 50; // same storage: the row sees the write
    expect(row[1]).toBe(50);
  });
});

describe("toRows", () => {
  afterEach(() => {
    vi.restoreAllMocks();
  });

  it("handles contiguous float32 and float64", () => {
    expect(toRows(view(new Float32Array([1, 2, 3, 4]), 2, 2))).toEqual([
      [1, 2],
      [3, 4],
    ]);
    expect(toRows(view(new Float64Array([1.5, -2.5]), 1, 2))).toEqual([[1.5, -2.5]]);
  });

  it("passes nested arrays through", () => {
    const rows = [[1, 2], [3, 4]];
    expect(toRows(rows)).toBe(rows);
  });

  it("copies strided views with a warning", () => {
    const warn = vi.spyOn(console, "warn").mockImplementation(() => {});
    const data = new Float64Array([1, 2, 99, 3, 4, 99]);
    const strided = { data, shape: [2, 2] as [number, number], rowStride: 3 };
    expect(toRows(strided)).toEqual([
      [1, 2],
      [3, 4],
    ]);
    expect(warn).toHaveBeenCalled();
  });

  it("rejects overrunning views", () => {
    const data = new Float64Array(4);
    expect(() => toRows({ data, shape: [2, 3] })).toThrow(RangeError);
  });

  it("rejects non-array input", () => {
    // @ts-expect-error deliberate misuse
    expect(() => toRows("nope")).toThrow(TypeError);
  });
});
