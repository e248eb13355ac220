import type { Instance } from "./types.js";

/** Accumulated slider overrides on top of a fixed base instance. */
export class OverrideState {
  private readonly overrides = new Map<string, number>();

  constructor(readonly base: Instance) {}

  set(name: string, value: number): void {
    if (!(name in this.base)) throw new Error(`unknown feature: ${name}`);
    if (!Number.isFinite(value)) throw new Error(`non-finite value for ${name}`);
    if (value === this.base[name]) {
      this.overrides.delete(name); // back to the original is no override
    } else {
      this.overrides.set(name, value);
    }
  }

  reset(): void {
    this.overrides.clear();
  }

  get size(): number {
    return this.overrides.size;
  }

  asRecord(): Instance {
    return Object.fromEntries(this.overrides);
  }

  merged(): Instance {
    return { ...this.base, ...this.asRecord() };
  }
}
