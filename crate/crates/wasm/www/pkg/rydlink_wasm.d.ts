/* tslint:disable */
/* eslint-disable */

/**
 * A lattice sector with an editable spin configuration.
 */
export class GaugeView {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Flip one atom; removed atoms are left alone. Returns whether it flipped.
     */
    flip(atom: number): boolean;
    constructor(n_cols: number, n_rows: number, d: number);
    reset(): void;
    to_json(): string;
}

export function fitDemo(sigma: number, gamma: number, c: number, noise: number, points: number, seed: bigint): string;

export function potentialCurve(delta: number, r_max: number, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_gaugeview_free: (a: number, b: number) => void;
    readonly fitDemo: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
    readonly gaugeview_flip: (a: number, b: number) => number;
    readonly gaugeview_new: (a: number, b: number, c: number) => [number, number, number];
    readonly gaugeview_reset: (a: number) => void;
    readonly gaugeview_to_json: (a: number) => [number, number];
    readonly potentialCurve: (a: number, b: number, c: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
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
