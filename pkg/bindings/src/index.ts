/**
 * Flat array-in/array-out surface mirroring the primary operation
 * names: triple_distance, gak_forward, label_matrix, mse_loss,
 * loss_gradient. All functions delegate to the backing process over
 * its line-JSON endpoint and return plain numbers/arrays; results are
 * numerically identical to calling the primary directly because 64-bit
 * floats round-trip JSON exactly.
 */

import { toRows, toVector, type ArrayView, type FloatArray, type MatrixLike } from "./arrays.js";
import { TripleGakError } from "./errors.js";
import { Session, closeSharedSession, sharedSession } from "./session.js";

export { ArrayView, FloatArray, MatrixLike, view, rowOf, toRows } from "./arrays.js";
export { TripleGakError } from "./errors.js";
export { Session, closeSharedSession, sharedSession } from "./session.js";

export type Modality = "image" | "text";
export type Form = "atomic" | "composite";
export type KernelMode = "triple" | "shared_only";

export interface KernelOptions {
  delta?: number;
  normalizeGak?: boolean;
  kernelMode?: KernelMode;
  cellCap?: number;
  /** Session to run on; defaults to the shared one. */
  session?: Session;
}

export interface SliceSpec {
  /** Full slice vector; for composite slices this is specialist|shared
   * with `split` marking the boundary. */
  vector: FloatArray | number[];
  modality: Modality;
  form: Form;
  /** Length of the specialist part (composite slices only). */
  split?: number;
}

export interface SequenceSpec {
  /** (n, d) slice matrix, one row per slice. */
  slices: MatrixLike;
  /** Modality per row; a single value applies to every row. */
  modalities: Modality[] | Modality;
  form: Form;
  /** Specialist length for composite rows. */
  split?: number;
  docId?: string;
}

export interface ViewSpec extends SequenceSpec {
  sourceDocId: string;
  cut?: number;
}

function wireConfig(options: KernelOptions): Record<string, unknown> {
  const config: Record<string, unknown> = {};
  if (options.delta !== undefined) config.delta = options.delta;
  if (options.normalizeGak !== undefined) config.normalize_gak = options.normalizeGak;
  if (options.kernelMode !== undefined) config.kernel_mode = options.kernelMode;
  if (options.cellCap !== undefined) config.cell_cap = options.cellCap;
  return config;
}

function wireSliceFromVector(
  values: number[],
  modality: Modality,
  form: Form,
  split: number | undefined,
  where: string,
): Record<string, unknown> {
  if (form === "composite") {
    if (split === undefined || split <= 0 || split >= values.length) {
      throw new TripleGakError(
        "bad-request",
        `${where}: composite slices need 0 < split < ${values.length}`,
      );
    }
    return {
      modality,
      form,
      specialist: values.slice(0, split),
      shared: values.slice(split),
    };
  }
  return { modality, form, whole: values };
}

function wireSequence(spec: SequenceSpec, where: string): Record<string, unknown>[] {
  const rows = toRows(spec.slices);
  if (rows.length === 0) {
    throw new TripleGakError("bad-request", `${where}: empty sequence`);
  }
  const modalities = Array.isArray(spec.modalities)
    ? spec.modalities
    : new Array<Modality>(rows.length).fill(spec.modalities);
  if (modalities.length !== rows.length) {
    throw new TripleGakError(
      "bad-request",
      `${where}: ${modalities.length} modality tags for ${rows.length} slices`,
    );
  }
  return rows.map((row, i) =>
    wireSliceFromVector(row, modalities[i], spec.form, spec.split, `${where}[${i}]`),
  );
}

function run(options: KernelOptions, request: Record<string, unknown>): Promise<unknown> {
  return (options.session ?? sharedSession()).call(request);
}

/** Slice-to-slice squared distance under the modality-aware rule. */
export async function triple_distance(
  a: SliceSpec,
  b: SliceSpec,
  mode: KernelMode = "triple",
  options: KernelOptions = {},
): Promise<number> {
  const request = {
    op: "triple_distance",
    a: wireSliceFromVector(toVector(a.vector), a.modality, a.form, a.split, "a"),
    b: wireSliceFromVector(toVector(b.vector), b.modality, b.form, b.split, "b"),
    mode,
  };
  return (await run(options, request)) as number;
}

/** Sequence similarity by the alignment-sum recursion. */
export async function gak_forward(
  x: SequenceSpec,
  y: SequenceSpec,
  options: KernelOptions = {},
): Promise<number> {
  const request = {
    op: "gak_forward",
    x: { doc_id: x.docId ?? "x", slices: wireSequence(x, "x") },
    y: { doc_id: y.docId ?? "y", slices: wireSequence(y, "y") },
    config: wireConfig(options),
  };
  return (await run(options, request)) as number;
}

/** Pairwise view similarities with the same-source override. */
export async function label_matrix(
  views: ViewSpec[],
  options: KernelOptions = {},
): Promise<number[][]> {
  const request = {
    op: "label_matrix",
    views: views.map((v, i) => ({
      source_doc_id: v.sourceDocId,
      cut: v.cut ?? toRows(v.slices).length,
      slices: wireSequence(v, `views[${i}]`),
    })),
    config: wireConfig(options),
  };
  return (await run(options, request)) as number[][];
}

/** (1/n) sum of squared entry differences between the two matrices. */
export async function mse_loss(
  mr: MatrixLike,
  ml: MatrixLike,
  options: KernelOptions = {},
): Promise<number> {
  const request = { op: "mse_loss", mr: toRows(mr), ml: toRows(ml) };
  return (await run(options, request)) as number;
}

/** Analytic loss gradient per representation row. */
export async function loss_gradient(
  reps: MatrixLike,
  ml: MatrixLike,
  options: KernelOptions = {},
): Promise<number[][]> {
  const request = { op: "loss_gradient", reps: toRows(reps), ml: toRows(ml) };
  return (await run(options, request)) as number[][];
}
