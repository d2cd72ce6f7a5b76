/**
 * Closed-form severity calibrations, mirroring the engine's conventions.
 *
 * These are plain scalar formulas, so they are computed here rather
 * than through a child process; the test suite pins them against the
 * same ladder fixtures the engine reproduces.
 */

/** Effective photons per pixel at quantum severity sQ: n0 / sQ^2. */
export function photonBudget(sQ: number, n0 = 1000): number {
  if (!Number.isFinite(sQ) || sQ < 1) {
    throw new Error(
      `photon budget is only defined for sQ >= 1, got ${sQ} (0 means the quantum source is omitted)`,
    );
  }
  if (!Number.isFinite(n0) || n0 <= 0) {
    throw new Error(`n0 must be positive, got ${n0}`);
  }
  return n0 / (sQ * sQ);
}

/**
 * Electronic noise std at severity sE: sigma0 * sE, rounded to 15
 * significant digits so decimal-calibrated ladders stay exact
 * (a raw binary product turns 0.1 * 6 into 0.6000...0001).
 */
export function sigmaE(sE: number, sigma0 = 0.1): number {
  if (!Number.isFinite(sE) || sE < 0) {
    throw new Error(`sE must be finite and >= 0, got ${sE}`);
  }
  if (!Number.isFinite(sigma0) || sigma0 < 0) {
    throw new Error(`sigma0 must be finite and >= 0, got ${sigma0}`);
  }
  const product = sigma0 * sE;
  return product === 0 ? 0 : Number(product.toPrecision(15));
}
