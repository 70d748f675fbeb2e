/** Number-state quadrature densities for the histogram overlay.

The only physics evaluated client-side: |psi_n(q)|^2 via the normalized
oscillator recurrence (vacuum variance 1/2 convention), mirrored from the
backend and cross-checked against its exported fixtures file in the tests.
*/

export function wavefunctionSq(q: number, nMax: number): number[] {
  const out = new Array<number>(nMax + 1);
  let prev = Math.PI ** -0.25 * Math.exp(-0.5 * q * q);
  out[0] = prev * prev;
  if (nMax >= 1) {
    let cur = Math.SQRT2 * q * prev;
    out[1] = cur * cur;
    for (let n = 1; n < nMax; n++) {
      const next = q * Math.sqrt(2 / (n + 1)) * cur - Math.sqrt(n / (n + 1)) * prev;
      prev = cur;
      cur = next;
      out[n + 1] = cur * cur;
    }
  }
  return out;
}

/** Mixture density sum_n p_n |psi_n(q)|^2 for reconstructed diagonals. */
export function mixtureDensity(diagonals: number[], q: number): number {
  const comps = wavefunctionSq(q, diagonals.length - 1);
  let total = 0;
  for (let n = 0; n < diagonals.length; n++) total += diagonals[n] * comps[n];
  return total;
}

export function densityCurve(diagonals: number[], qs: number[]): number[] {
  return qs.map((q) => mixtureDensity(diagonals, q));
}
