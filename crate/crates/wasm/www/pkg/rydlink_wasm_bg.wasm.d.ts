/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_gaugeview_free: (a: number, b: number) => void;
export const fitDemo: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
export const gaugeview_flip: (a: number, b: number) => number;
export const gaugeview_new: (a: number, b: number, c: number) => [number, number, number];
export const gaugeview_reset: (a: number) => void;
export const gaugeview_to_json: (a: number) => [number, number];
export const potentialCurve: (a: number, b: number, c: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
