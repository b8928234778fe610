/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const __wbg_warppreview_free: (a: number, b: number) => void;
export const demo_gaussian_count: (a: number) => number;
export const demo_height: (a: number) => number;
export const demo_new: (a: number, b: number, c: bigint) => [number, number, number];
export const demo_plan: (a: number, b: number) => [number, number, number, number];
export const demo_render_rgba: (a: number, b: number, c: number) => [number, number];
export const demo_warp: (a: number, b: number, c: number, d: number) => [number, number, number];
export const demo_width: (a: number) => number;
export const warppreview_energy: (a: number) => number;
export const warppreview_rgba: (a: number) => [number, number];
export const warppreview_valid_fraction: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
