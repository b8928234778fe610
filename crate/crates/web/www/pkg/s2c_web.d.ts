/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    gaussian_count(): number;
    height(): number;
    constructor(kind: string, seed: bigint);
    /**
     * Trajectory and coverage for a gain threshold, as JSON.
     */
    plan(gain_threshold: number): string;
    /**
     * RGBA view from the room center.
     */
    render_rgba(yaw_deg: number, pitch_deg: number): Uint8Array;
    warp(yaw_src: number, yaw_dst: number, pitch: number): WarpPreview;
    width(): number;
}

export class WarpPreview {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Consistency energy of the destination rendering against the warp.
     */
    energy(): number;
    /**
     * Warped source view; pixels without a source point are black.
     */
    rgba(): Uint8Array;
    valid_fraction(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly __wbg_warppreview_free: (a: number, b: number) => void;
    readonly demo_gaussian_count: (a: number) => number;
    readonly demo_height: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: bigint) => [number, number, number];
    readonly demo_plan: (a: number, b: number) => [number, number, number, number];
    readonly demo_render_rgba: (a: number, b: number, c: number) => [number, number];
    readonly demo_warp: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_width: (a: number) => number;
    readonly warppreview_energy: (a: number) => number;
    readonly warppreview_rgba: (a: number) => [number, number];
    readonly warppreview_valid_fraction: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
