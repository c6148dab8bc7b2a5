/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_simulation_free: (a: number, b: number) => void;
export const kernelProfile: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const presets: () => [number, number];
export const sProfile: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const simulation_advance: (a: number, b: number) => number;
export const simulation_halted: (a: number) => [number, number];
export const simulation_hamiltonian: (a: number) => number;
export const simulation_min_slope: (a: number) => number;
export const simulation_new: (a: number, b: number) => [number, number, number];
export const simulation_rho: (a: number) => [number, number];
export const simulation_tail_mass: (a: number) => number;
export const simulation_time: (a: number) => number;
export const simulation_u: (a: number) => [number, number];
export const simulation_window: (a: number) => [number, number];
export const simulation_x: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_start: () => void;
