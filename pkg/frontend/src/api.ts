// Thin HTTP client for the rating service. All state lives server-side;
// this module only shapes requests/responses and surfaces errors.

export type ItemView = {
  item_id: string
  renders: string[] // two axial + one sagittal rendering URLs
  rubric: string
}

export type SessionView = {
  session_id: string
  progress: { scored: number; total: number }
  complete: boolean
  item?: ItemView
}

export class ApiError extends Error {
  status: number
  constructor(status: number, detail: string) {
    super(detail)
    this.status = status
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  let resp: Response
  try {
    resp = await fetch(base + path, init)
  } catch (err) {
    throw new ApiError(0, `network failure: ${String(err)}`)
  }
  if (!resp.ok) {
    let detail = `HTTP ${resp.status}`
    try {
      const body = await resp.json()
      if (body && body.detail) detail = String(body.detail)
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail)
  }
  return (await resp.json()) as T
}

export function fetchNext(base: string, sessionId: string): Promise<SessionView> {
  return request<SessionView>(base, `/sessions/${sessionId}/next`)
}

export function submitScore(
  base: string,
  sessionId: string,
  itemId: string,
  completeness: number,
  correctness: number,
): Promise<{ ok: boolean; progress: { scored: number; total: number } }> {
  return request(base, `/sessions/${sessionId}/scores`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ item_id: itemId, completeness, correctness }),
  })
}
