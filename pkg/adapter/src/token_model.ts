/**
 * Pretrained backend: a direction-conditioned quantized token model loaded
 * from a JSON checkpoint.
 *
 * Speeds are normalized per request (divided by the context maximum),
 * quantized into vocab_size uniform bins; generation starts from the
 * requested direction's initial token distribution and walks the learned
 * transition rows with top-k / temperature sampling; decoded bin centers
 * are rescaled back to m/s. Outputs are always exactly 64 samples.
 */

import { readFileSync } from 'node:fs';
import { ForecastRequest, N_DIRECTIONS, TRACE_LEN } from './protocol.js';
import { mixSeed, Rng } from './rng.js';

export interface TokenCheckpoint {
  vocab_size: number;
  /** row-stochastic next-token probabilities, vocab_size x vocab_size */
  transitions: number[][];
  /** initial token distribution per direction token, 8 x vocab_size */
  direction_init: number[][];
}

export class ModelLoadError extends Error {}

export interface SamplingOptions {
  seed: number;
  topK: number;
  temperature: number;
}

function isDistribution(row: unknown, size: number): row is number[] {
  if (!Array.isArray(row) || row.length !== size) return false;
  let total = 0;
  for (const v of row) {
    if (!Number.isFinite(v) || v < 0) return false;
    total += v;
  }
  return Math.abs(total - 1) < 1e-6;
}

export function loadCheckpoint(path: string): TokenCheckpoint {
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(path, 'utf8'));
  } catch (err) {
    throw new ModelLoadError(`cannot read checkpoint ${path}: ${err}`);
  }
  const ckpt = doc as Partial<TokenCheckpoint>;
  const size = ckpt.vocab_size;
  if (!Number.isInteger(size) || (size as number) < 2) {
    throw new ModelLoadError('checkpoint lacks a valid vocab_size');
  }
  if (
    !Array.isArray(ckpt.transitions) ||
    ckpt.transitions.length !== size ||
    !ckpt.transitions.every((row) => isDistribution(row, size as number))
  ) {
    throw new ModelLoadError('checkpoint transitions must be row-stochastic');
  }
  if (
    !Array.isArray(ckpt.direction_init) ||
    ckpt.direction_init.length !== N_DIRECTIONS ||
    !ckpt.direction_init.every((row) => isDistribution(row, size as number))
  ) {
    throw new ModelLoadError('checkpoint needs one initial distribution per direction');
  }
  return ckpt as TokenCheckpoint;
}

/** top-k + temperature categorical draw */
function sampleToken(probs: number[], opts: SamplingOptions, rng: Rng): number {
  const k = Math.max(1, Math.min(opts.topK, probs.length));
  const order = probs
    .map((p, token) => ({ p, token }))
    .sort((a, b) => b.p - a.p || a.token - b.token)
    .slice(0, k);
  if (opts.temperature <= 1e-6 || k === 1) return order[0].token;
  const scaled = order.map(({ p }) => Math.pow(Math.max(p, 1e-12), 1 / opts.temperature));
  const total = scaled.reduce((a, b) => a + b, 0);
  let coin = rng.next() * total;
  for (let i = 0; i < order.length; i++) {
    coin -= scaled[i];
    if (coin <= 0) return order[i].token;
  }
  return order[order.length - 1].token;
}

export function pretrainedForecast(
  ckpt: TokenCheckpoint,
  req: ForecastRequest,
  opts: SamplingOptions,
): Record<string, number[][]> {
  let scale = 0;
  for (const row of req.context) for (const v of row) scale = Math.max(scale, v);
  if (scale <= 0) scale = 1;
  const centers = Array.from({ length: ckpt.vocab_size }, (_, i) => ((i + 0.5) / ckpt.vocab_size) * scale);

  const pools: Record<string, number[][]> = {};
  for (const target of req.targets) {
    const rng = new Rng(mixSeed(opts.seed, req.seed, req.subject_id, 'token', target.dir));
    const pool: number[][] = [];
    for (let m = 0; m < req.pool_size; m++) {
      const path: number[] = [];
      let token = sampleToken(ckpt.direction_init[target.dir], opts, rng);
      for (let t = 0; t < TRACE_LEN; t++) {
        path.push(centers[token]);
        token = sampleToken(ckpt.transitions[token], opts, rng);
      }
      pool.push(path);
    }
    pools[String(target.dir)] = pool;
  }
  return pools;
}
