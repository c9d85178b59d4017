/** Debounced request scheduling with latest-wins response correlation.
 *
 * Edits schedule a send; the send fires after a quiet period. Every send
 * gets a monotonically increasing id, and only the response matching the
 * newest id is applied, so a slow early response can never overwrite the
 * verdict for a newer editor state.
 */

export interface SyncOptions<P, R> {
  send: (payload: P) => Promise<R>;
  apply: (result: R, payload: P) => void;
  onError?: (error: unknown, payload: P) => void;
  delayMs?: number;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
  clearTimeoutFn?: (handle: unknown) => void;
}

export interface Sync<P> {
  schedule(payload: P): void;
  flush(): void;
  inFlight(): boolean;
}

export function createSync<P, R>(options: SyncOptions<P, R>): Sync<P> {
  const delay = options.delayMs ?? 300;
  const setT = options.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
  const clearT = options.clearTimeoutFn ??
      ((handle) => clearTimeout(handle as ReturnType<typeof setTimeout>));

  let timer: unknown;
  let nextId = 0;
  let latestSent = 0;
  let latestApplied = 0;
  let pendingPayload: P | undefined;
  let hasPending = false;
  let outstanding = 0;

  function fire(): void {
    if (!hasPending) return;
    const payload = pendingPayload as P;
    hasPending = false;
    pendingPayload = undefined;
    nextId += 1;
    const id = nextId;
    latestSent = id;
    outstanding += 1;
    options.send(payload).then(
      (result) => {
        outstanding -= 1;
        if (id > latestApplied && id === latestSent) {
          latestApplied = id;
          options.apply(result, payload);
        }
      },
      (error) => {
        outstanding -= 1;
        if (id === latestSent && options.onError) {
          options.onError(error, payload);
        }
      },
    );
  }

  return {
    schedule(payload: P): void {
      pendingPayload = payload;
      hasPending = true;
      if (timer !== undefined) clearT(timer);
      timer = setT(() => {
        timer = undefined;
        fire();
      }, delay);
    },
    flush(): void {
      if (timer !== undefined) {
        clearT(timer);
        timer = undefined;
      }
      fire();
    },
    inFlight(): boolean {
      return outstanding > 0;
    },
  };
}
