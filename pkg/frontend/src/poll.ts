/* Interval polling with overlap protection. The gateway exposes no push
 * channel, so every live view re-fetches on a timer.
 */

export const DEFAULT_POLL_MS = 2000;

export class Poller {
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;

  constructor(
    private readonly tick: () => Promise<void>,
    private readonly intervalMs: number = DEFAULT_POLL_MS,
    private readonly onError: (err: unknown) => void = () => {},
  ) {}

  start(): void {
    if (this.timer !== null) return;
    void this.run();
    this.timer = setInterval(() => void this.run(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** One immediate refresh, shared by the timer and by button handlers. */
  async run(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      await this.tick();
    } catch (err) {
      this.onError(err);
    } finally {
      this.inFlight = false;
    }
  }
}
