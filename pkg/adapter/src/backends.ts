/**
 * Baseline forecasters.
 *
 * noise_template: per-direction mean of the context traces (falling back to
 * the all-context mean), plus Gaussian noise at the residual SD of the
 * context about its templates, clamped at zero. With one context trial per
 * direction the residual is zero and every pool member equals the template.
 *
 * context_mixture: random convex mixtures of context traces with extra
 * weight on the requested direction.
 */

import { ForecastRequest, TRACE_LEN } from './protocol.js';
import { mixSeed, Rng } from './rng.js';

export interface BackendOptions {
  seed: number;
  noiseScale?: number; // overrides the residual SD when set
}

function meanOf(rows: number[][]): number[] {
  const out = new Array<number>(TRACE_LEN).fill(0);
  for (const row of rows) {
    for (let i = 0; i < TRACE_LEN; i++) out[i] += row[i];
  }
  for (let i = 0; i < TRACE_LEN; i++) out[i] /= rows.length;
  return out;
}

function templatesByDirection(req: ForecastRequest): Map<number, number[]> {
  const byDir = new Map<number, number[][]>();
  req.context.forEach((row, i) => {
    const dir = req.context_dirs[i];
    const rows = byDir.get(dir) ?? [];
    rows.push(row);
    byDir.set(dir, rows);
  });
  const templates = new Map<number, number[]>();
  for (const [dir, rows] of byDir) templates.set(dir, meanOf(rows));
  return templates;
}

function residualSd(req: ForecastRequest, templates: Map<number, number[]>): number {
  let sumSq = 0;
  let count = 0;
  req.context.forEach((row, i) => {
    const template = templates.get(req.context_dirs[i]);
    if (!template) return;
    for (let t = 0; t < TRACE_LEN; t++) {
      const r = row[t] - template[t];
      sumSq += r * r;
      count += 1;
    }
  });
  return count ? Math.sqrt(sumSq / count) : 0;
}

export function noiseTemplate(req: ForecastRequest, opts: BackendOptions): Record<string, number[][]> {
  const templates = templatesByDirection(req);
  const fallback = meanOf(req.context);
  const sigma = opts.noiseScale ?? residualSd(req, templates);
  const pools: Record<string, number[][]> = {};
  for (const target of req.targets) {
    const template = templates.get(target.dir) ?? fallback;
    const rng = new Rng(mixSeed(opts.seed, req.seed, req.subject_id, 'noise', target.dir));
    const pool: number[][] = [];
    for (let m = 0; m < req.pool_size; m++) {
      pool.push(template.map((v) => Math.max(0, v + (sigma > 0 ? sigma * rng.gauss() : 0))));
    }
    pools[String(target.dir)] = pool;
  }
  return pools;
}

export function contextMixture(req: ForecastRequest, opts: BackendOptions): Record<string, number[][]> {
  const pools: Record<string, number[][]> = {};
  for (const target of req.targets) {
    const rng = new Rng(mixSeed(opts.seed, req.seed, req.subject_id, 'mixture', target.dir));
    const pool: number[][] = [];
    for (let m = 0; m < req.pool_size; m++) {
      const weights = req.context.map((_, i) => {
        const bias = req.context_dirs[i] === target.dir ? 3 : 1;
        return bias * (0.5 + rng.next());
      });
      const total = weights.reduce((a, b) => a + b, 0);
      const member = new Array<number>(TRACE_LEN).fill(0);
      req.context.forEach((row, i) => {
        const w = weights[i] / total;
        for (let t = 0; t < TRACE_LEN; t++) member[t] += w * row[t];
      });
      pool.push(member.map((v) => Math.max(0, v)));
    }
    pools[String(target.dir)] = pool;
  }
  return pools;
}
