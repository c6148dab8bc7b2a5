/* tslint:disable */
/* eslint-disable */

export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    advance(steps: number): number;
    halted(): string | undefined;
    hamiltonian(): number;
    min_slope(): number;
    constructor(preset: string);
    rho(): Float64Array;
    tail_mass(): number;
    time(): number;
    u(): Float64Array;
    window(): Float64Array;
    x(): Float64Array;
}

export function kernelProfile(domain_name: string, half_length: number, center: number, points: number): Float64Array;

export function presets(): string[];

export function sProfile(domain_name: string, half_length: number, a: number, b: number, points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly kernelProfile: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly presets: () => [number, number];
    readonly sProfile: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly simulation_advance: (a: number, b: number) => number;
    readonly simulation_halted: (a: number) => [number, number];
    readonly simulation_hamiltonian: (a: number) => number;
    readonly simulation_min_slope: (a: number) => number;
    readonly simulation_new: (a: number, b: number) => [number, number, number];
    readonly simulation_rho: (a: number) => [number, number];
    readonly simulation_tail_mass: (a: number) => number;
    readonly simulation_time: (a: number) => number;
    readonly simulation_u: (a: number) => [number, number];
    readonly simulation_window: (a: number) => [number, number];
    readonly simulation_x: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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
