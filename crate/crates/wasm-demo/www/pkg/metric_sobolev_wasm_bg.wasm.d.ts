/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const hopf_lax_grid: (a: number, b: number, c: number, d: number) => [number, number];
export const partition_cloud: (a: number, b: number, c: number) => [number, number];
export const sine_energy_ladder: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
