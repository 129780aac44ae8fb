// One-outstanding-request gate with latest-wins coalescing. Rapid drag events
// collapse to at most one in-flight request; whatever arrived while waiting
// is submitted (once) when the reply lands, so the newest state is always
// eventually requested and answered.

export class LatestWinsGate<T> {
  private inFlight = false;
  private pending: T | null = null;

  constructor(private readonly submit: (payload: T) => void) {}

  /** Submit now if idle, otherwise replace the queued payload. */
  request(payload: T): void {
    if (this.inFlight) {
      this.pending = payload;
      return;
    }
    this.inFlight = true;
    this.submit(payload);
  }

  /** Call when the in-flight request is answered (or failed). */
  settled(): void {
    if (!this.inFlight) return;
    if (this.pending !== null) {
      const next = this.pending;
      this.pending = null;
      this.submit(next);
      return; // still in flight with the coalesced payload
    }
    this.inFlight = false;
  }

  /** Drop any state, e.g. when the connection goes away. */
  reset(): void {
    this.inFlight = false;
    this.pending = null;
  }

  get busy(): boolean {
    return this.inFlight;
  }
}
