/* tslint:disable */
/* eslint-disable */

/**
 * Hopf-Lax evolution of a random Lipschitz field on an `n × n` grid.
 */
export function hopf_lax_grid(n: number, seed: number, p: number, t: number): string;

/**
 * Partition of `n` uniform points in the unit square at scale `delta`.
 */
export function partition_cloud(n: number, seed: number, delta: number): string;

/**
 * Energy of `sin(2πx)` on `[0, 1]` across a ladder of scales, with the
 * ratio to the exact energy and the admissible bracket.
 */
export function sine_energy_ladder(points: number, q: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly hopf_lax_grid: (a: number, b: number, c: number, d: number) => [number, number];
    readonly partition_cloud: (a: number, b: number, c: number) => [number, number];
    readonly sine_energy_ladder: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
