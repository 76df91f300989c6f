import { describe, expect, it } from 'vitest';
import { contextMixture, noiseTemplate } from '../src/backends.js';
import { ForecastRequest } from '../src/protocol.js';
import { makeRequest, makeTrace, rms } from './helpers.js';

const req = (over: Record<string, unknown> = {}) => makeRequest(over) as unknown as ForecastRequest;

describe('noise_template', () => {
  it('singleton directions give the template itself (zero residual)', () => {
    const pools = noiseTemplate(req(), { seed: 1 });
    for (let d = 0; d < 8; d++) {
      const template = makeTrace(d);
      for (const member of pools[String(d)]) {
        expect(rms(member, template)).toBeLessThan(1e-12);
      }
    }
  });

  it('repeated directions produce spread around their mean', () => {
    const request = req({
      context: [makeTrace(0), makeTrace(3)],
      context_dirs: [0, 0],
      targets: [{ dir: 0, count: 2 }],
      pool_size: 6,
    });
    const pools = noiseTemplate(request, { seed: 1 });
    const members = pools['0'];
    expect(rms(members[0], members[1])).toBeGreaterThan(0);
    for (const member of members) {
      for (const v of member) expect(v).toBeGreaterThanOrEqual(0);
    }
  });

  it('unseen directions fall back to the all-context mean', () => {
    const request = req({
      context: [makeTrace(0), makeTrace(4)],
      context_dirs: [0, 1],
      targets: [{ dir: 7, count: 1 }],
      pool_size: 2,
    });
    const pools = noiseTemplate(request, { seed: 1 });
    const fallback = makeTrace(0).map((v, i) => (v + makeTrace(4)[i]) / 2);
    expect(rms(pools['7'][0], fallback)).toBeLessThan(1e-12);
  });

  it('noise-scale override is honored', () => {
    const pools = noiseTemplate(req({ pool_size: 3 }), { seed: 1, noiseScale: 0.05 });
    const members = pools['0'];
    expect(rms(members[0], members[1])).toBeGreaterThan(0.01);
  });
});

describe('context_mixture', () => {
  it('members are convex mixtures: bounded by context envelope', () => {
    const request = req({ pool_size: 5 });
    const pools = contextMixture(request as ForecastRequest, { seed: 2 });
    const context = (request as ForecastRequest).context;
    for (let d = 0; d < 8; d++) {
      for (const member of pools[String(d)]) {
        for (let t = 0; t < 64; t++) {
          const column = context.map((row) => row[t]);
          expect(member[t]).toBeGreaterThanOrEqual(Math.min(...column) - 1e-9);
          expect(member[t]).toBeLessThanOrEqual(Math.max(...column) + 1e-9);
        }
      }
    }
  });

  it('is deterministic per seed', () => {
    const a = contextMixture(req(), { seed: 9 });
    const b = contextMixture(req(), { seed: 9 });
    expect(JSON.stringify(a)).toBe(JSON.stringify(b));
    const c = contextMixture(req(), { seed: 10 });
    expect(JSON.stringify(a)).not.toBe(JSON.stringify(c));
  });
});
