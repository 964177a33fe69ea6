/* tslint:disable */
/* eslint-disable */

/**
 * A 2D run on the unit square, advanced a few steps per animation frame.
 */
export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    initial_mass(): number;
    linf(): number;
    mass(): number;
    n(): number;
    /**
     * See [`Simulation::try_new`].
     */
    constructor(n: number, chi: number, c: number, gamma: number, tau: number, seed: number);
    /**
     * `u` as RGBA pixels (one per cell, row-major, y up), scaled to the
     * current maximum.
     */
    render_rgba(): Uint8Array;
    status(): string;
    /**
     * Advances up to `k` adaptive steps; stops early on blow-up or failure.
     */
    step(k: number): string;
    time(): number;
}

/**
 * Plain-text report on whether `γ` is admissible in dimension `n_dim` and
 * which exponent `p` makes the bootstrap work.
 */
export function gamma_report(n_dim: number, gamma: number): string;

/**
 * Constants `C1` and `C_f` of `f(s) = a s^alpha − b s^beta` with sink
 * weight `c2`, as text.
 */
export function logistic_report(a: number, b: number, alpha: number, beta: number, c2: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly gamma_report: (a: number, b: number) => [number, number];
    readonly logistic_report: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly simulation_initial_mass: (a: number) => number;
    readonly simulation_linf: (a: number) => number;
    readonly simulation_mass: (a: number) => number;
    readonly simulation_n: (a: number) => number;
    readonly simulation_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly simulation_render_rgba: (a: number) => [number, number];
    readonly simulation_status: (a: number) => [number, number];
    readonly simulation_step: (a: number, b: number) => [number, number];
    readonly simulation_time: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
