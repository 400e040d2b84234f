// Rating-session state machine. The server is the source of truth: the
// controller only caches the current item and the rater's pending selections,
// and advances strictly on server acknowledgment.

import { ApiError, fetchNext, submitScore, type SessionView } from "./api"

export const SCORE_MIN = 1
export const SCORE_MAX = 6

export type ControllerState = {
  phase: "loading" | "rating" | "complete" | "error"
  view: SessionView | null
  completeness: number | null
  correctness: number | null
  error: string | null
}

export class SessionController {
  readonly base: string
  readonly sessionId: string
  state: ControllerState

  constructor(base: string, sessionId: string) {
    this.base = base
    this.sessionId = sessionId
    this.state = {
      phase: "loading",
      view: null,
      completeness: null,
      correctness: null,
      error: null,
    }
  }

  /** Load the next unscored item; after a page reload this resumes the
   *  session exactly where the server says it stands. */
  async refresh(): Promise<ControllerState> {
    try {
      const view = await fetchNext(this.base, this.sessionId)
      this.state = {
        phase: view.complete ? "complete" : "rating",
        view,
        completeness: null,
        correctness: null,
        error: null,
      }
    } catch (err) {
      this.state = {
        ...this.state,
        phase: "error",
        error: err instanceof Error ? err.message : String(err),
      }
    }
    return this.state
  }

  select(dimension: "completeness" | "correctness", value: number): void {
    if (!Number.isInteger(value) || value < SCORE_MIN || value > SCORE_MAX) {
      throw new RangeError(`score must be an integer in [${SCORE_MIN}, ${SCORE_MAX}]`)
    }
    if (this.state.phase !== "rating") return
    this.state = { ...this.state, [dimension]: value }
  }

  get canSubmit(): boolean {
    return (
      this.state.phase === "rating" &&
      this.state.completeness !== null &&
      this.state.correctness !== null
    )
  }

  /** Submit the selected pair and advance. On failure the selections are
   *  kept so the rater can retry without re-entering anything. */
  async submitAndAdvance(): Promise<ControllerState> {
    const { view, completeness, correctness } = this.state
    if (!this.canSubmit || !view || !view.item) return this.state
    try {
      await submitScore(
        this.base,
        this.sessionId,
        view.item.item_id,
        completeness as number,
        correctness as number,
      )
    } catch (err) {
      const detail = err instanceof ApiError ? err.message : String(err)
      this.state = { ...this.state, error: `submit failed: ${detail}` }
      return this.state // selections preserved for retry
    }
    return this.refresh()
  }
}
