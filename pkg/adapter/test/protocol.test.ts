import { describe, expect, it } from 'vitest';
import { validateRequest } from '../src/protocol.js';
import { makeRequest } from './helpers.js';

describe('validateRequest', () => {
  it('accepts a well-formed request', () => {
    expect(validateRequest(makeRequest())).toBeNull();
  });

  it.each([
    [null],
    ['text'],
    [{}],
    [makeRequest({ id: 'one' })],
    [makeRequest({ subject_id: 7 })],
    [makeRequest({ context: 'rows' })],
    [makeRequest({ context: [[0.1, 0.2]] , context_dirs: [0] })],
    [makeRequest({ context_dirs: [0] })],
    [makeRequest({ targets: [] })],
    [makeRequest({ targets: [{ dir: -1, count: 1 }] })],
    [makeRequest({ targets: [{ dir: 0, count: 1.5 }] })],
    [makeRequest({ pool_size: -3 })],
    [makeRequest({ seed: 0.5 })],
  ])('rejects %#', (msg) => {
    expect(validateRequest(msg)).toBeTruthy();
  });

  it('rejects non-finite samples', () => {
    const context = makeRequest().context as number[][];
    context[0][10] = Number.NaN;
    expect(validateRequest(makeRequest({ context }))).toBeTruthy();
  });
});
