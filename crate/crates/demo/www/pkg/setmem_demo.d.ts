/* tslint:disable */
/* eslint-disable */

/**
 * One bandit run over `A1`..`A4`: arms (1-based), state norms and
 * per-arm estimation errors by step.
 */
export function bandit_trace(seed: number, horizon: number): string;

/**
 * Median SME and OLS errors on `A2` over `seeds` runs of length `horizon`.
 */
export function compare_ols_curve(seeds: number, horizon: number, noise_radius: number): string;

/**
 * Spectral radius, norm and eigenvalue moduli. `input` is a built-in name
 * (`A1`..`A4`) or a matrix such as `"0.5, 1; 0, 0.9"`.
 */
export function spectral_summary(input: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bandit_trace: (a: number, b: number) => [number, number, number, number];
    readonly compare_ols_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly spectral_summary: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
