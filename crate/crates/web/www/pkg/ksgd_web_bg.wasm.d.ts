/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_simulation_free: (a: number, b: number) => void;
export const gamma_report: (a: number, b: number) => [number, number];
export const logistic_report: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const simulation_initial_mass: (a: number) => number;
export const simulation_linf: (a: number) => number;
export const simulation_mass: (a: number) => number;
export const simulation_n: (a: number) => number;
export const simulation_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const simulation_render_rgba: (a: number) => [number, number];
export const simulation_status: (a: number) => [number, number];
export const simulation_step: (a: number, b: number) => [number, number];
export const simulation_time: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
