/**
 * Latest-wins request scheduling for the what-if slider.
 *
 * Rapid inputs collapse into one request for the newest value after a quiet
 * period; at most one request is in flight; a result is delivered only when
 * no newer input has arrived since it was issued.
 */
export class LatestWinsRequester<V, R> {
  private timer: ReturnType<typeof setTimeout> | undefined;
  private pending: { value: V } | undefined;
  private inFlight = false;

  constructor(
    private readonly send: (value: V) => Promise<R>,
    private readonly deliver: (value: V, result: R) => void,
    private readonly delayMs = 150,
    private readonly onError: (err: unknown) => void = () => {},
  ) {}

  input(value: V): void {
    this.pending = { value };
    if (this.timer !== undefined) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = undefined;
      void this.flush();
    }, this.delayMs);
  }

  private async flush(): Promise<void> {
    if (this.inFlight || this.pending === undefined) return;
    const { value } = this.pending;
    this.pending = undefined;
    this.inFlight = true;
    try {
      const result = await this.send(value);
      // stale if a newer input landed while this was on the wire
      if (this.pending === undefined) this.deliver(value, result);
    } catch (err) {
      this.onError(err);
    } finally {
      this.inFlight = false;
      if (this.pending !== undefined && this.timer === undefined) void this.flush();
    }
  }
}
