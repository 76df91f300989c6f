/**
 * Deterministic RNG (splitmix64): the same (seed, labels) always produces
 * the same stream on every platform, so repeated requests are reproducible.
 */

const MASK64 = (1n << 64n) - 1n;

function fnv1a64(text: string): bigint {
  let hash = 0xcbf29ce484222325n;
  for (const byte of Buffer.from(text, 'utf8')) {
    hash ^= BigInt(byte);
    hash = (hash * 0x100000001b3n) & MASK64;
  }
  return hash;
}

export function mixSeed(...parts: Array<number | string>): bigint {
  let state = 0x9e3779b97f4a7c15n;
  for (const part of parts) {
    const word = typeof part === 'number' ? BigInt(Math.trunc(part)) & MASK64 : fnv1a64(part);
    state = ((state ^ word) * 0xbf58476d1ce4e5b9n) & MASK64;
  }
  return state;
}

export class Rng {
  private state: bigint;
  private spare: number | null = null;

  constructor(seed: bigint | number) {
    this.state = (typeof seed === 'number' ? BigInt(Math.trunc(seed)) : seed) & MASK64;
  }

  private nextU64(): bigint {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    return z ^ (z >> 31n);
  }

  /** uniform in [0, 1) with 53-bit resolution */
  next(): number {
    return Number(this.nextU64() >> 11n) / 2 ** 53;
  }

  /** standard normal via Box-Muller */
  gauss(): number {
    if (this.spare !== null) {
      const value = this.spare;
      this.spare = null;
      return value;
    }
    let u = this.next();
    while (u === 0) u = this.next();
    const v = this.next();
    const radius = Math.sqrt(-2 * Math.log(u));
    this.spare = radius * Math.sin(2 * Math.PI * v);
    return radius * Math.cos(2 * Math.PI * v);
  }

  /** integer in [0, n) */
  int(n: number): number {
    return Math.min(n - 1, Math.floor(this.next() * n));
  }
}
