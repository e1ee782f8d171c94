/**
 * Portable seeded Gaussian stream, matching the Python reference bit-for-bit
 * (up to libm sin/cos/log, which agree far beyond the 1e-5 parity tolerance).
 *
 *   state_0 = (2 * seed + 1) mod 2^64          (forced odd)
 *   state_k = (state_{k-1} * 6364136223846793005) mod 2^64
 *   u_k     = ((state_k >> 11) + 0.5) * 2^-53  (uniform in (0, 1))
 *
 * Normals come from Box-Muller over consecutive uniform pairs; a stream of
 * n normals consumes ceil(n/2) pairs and discards a trailing spare.
 */

const MCG_MULTIPLIER = 6364136223846793005n;
const MASK64 = (1n << 64n) - 1n;
const U53 = Math.pow(2, -53);

export class PortableRng {
  private state: bigint;
  private spare: number | null = null;

  constructor(seed: number | bigint) {
    this.state = (2n * (BigInt(seed) & MASK64) + 1n) & MASK64;
  }

  uniform(): number {
    this.state = (this.state * MCG_MULTIPLIER) & MASK64;
    return (Number(this.state >> 11n) + 0.5) * U53;
  }

  normal(): number {
    if (this.spare !== null) {
      const z = this.spare;
      this.spare = null;
      return z;
    }
    const u1 = this.uniform();
    const u2 = this.uniform();
    const r = Math.sqrt(-2.0 * Math.log(u1));
    this.spare = r * Math.sin(2.0 * Math.PI * u2);
    return r * Math.cos(2.0 * Math.PI * u2);
  }
}

export function normalStream(seed: number | bigint, n: number): Float64Array {
  const rng = new PortableRng(seed);
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) out[i] = rng.normal();
  return out;
}
