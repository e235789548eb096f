/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const det_field: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number) => [number, number, number, number];
export const hilbert_ranks: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const theta_field: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
