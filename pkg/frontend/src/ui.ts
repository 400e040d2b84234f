// DOM layer: renders the three slices, two mandatory 1-6 button rows and a
// submit button wired to the session controller. Discrete buttons (not
// sliders) keep the scale ordinal; keys 1-6 set the first unselected row.

import { SessionController, SCORE_MAX, SCORE_MIN } from "./session"

type Dimension = "completeness" | "correctness"
const DIMENSIONS: Dimension[] = ["completeness", "correctness"]

export function mount(root: HTMLElement, controller: SessionController): () => void {
  root.innerHTML = `
    <div class="progress" data-role="progress"></div>
    <div class="banner" data-role="error" hidden></div>
    <div class="slices" data-role="slices"></div>
    <p class="rubric" data-role="rubric"></p>
    <div data-role="scores"></div>
    <button type="button" data-role="submit" disabled>Submit and continue</button>
    <div class="done" data-role="done" hidden>Session complete — thank you.</div>
  `
  const el = (role: string) => root.querySelector(`[data-role="${role}"]`) as HTMLElement

  const scoresBox = el("scores")
  for (const dim of DIMENSIONS) {
    const row = document.createElement("div")
    row.dataset.dimension = dim
    const label = document.createElement("span")
    label.textContent = dim
    row.appendChild(label)
    for (let v = SCORE_MIN; v <= SCORE_MAX; v++) {
      const btn = document.createElement("button")
      btn.type = "button"
      btn.textContent = String(v)
      btn.dataset.value = String(v)
      btn.addEventListener("click", () => {
        controller.select(dim, v)
        render()
      })
      row.appendChild(btn)
    }
    scoresBox.appendChild(row)
  }

  const submit = el("submit") as HTMLButtonElement
  submit.addEventListener("click", async () => {
    submit.disabled = true
    await controller.submitAndAdvance()
    render()
  })

  // keyboard throughput: 1-6 fills completeness first, then correctness
  const onKey = (ev: KeyboardEvent) => {
    const v = Number(ev.key)
    if (!Number.isInteger(v) || v < SCORE_MIN || v > SCORE_MAX) return
    const dim = controller.state.completeness === null ? "completeness" : "correctness"
    controller.select(dim, v)
    render()
  }
  root.ownerDocument.addEventListener("keydown", onKey)

  function render(): void {
    const state = controller.state
    const banner = el("error")
    banner.hidden = !state.error
    banner.textContent = state.error ?? ""

    el("done").hidden = state.phase !== "complete"
    if (state.view) {
      const { scored, total } = state.view.progress
      el("progress").textContent = `${scored} / ${total}`
    }

    const slices = el("slices")
    slices.innerHTML = ""
    if (state.phase === "rating" && state.view?.item) {
      for (const url of state.view.item.renders) {
        const img = document.createElement("img")
        img.src = url
        img.alt = "annotated slice"
        slices.appendChild(img)
      }
      el("rubric").textContent = state.view.item.rubric
    } else {
      el("rubric").textContent = ""
    }

    for (const dim of DIMENSIONS) {
      const selected = state[dim]
      const row = scoresBox.querySelector(`[data-dimension="${dim}"]`) as HTMLElement
      row.querySelectorAll("button").forEach((btn) => {
        btn.classList.toggle("selected", Number(btn.dataset.value) === selected)
      })
    }
    submit.disabled = !controller.canSubmit
  }

  void controller.refresh().then(render)
  render()
  return () => root.ownerDocument.removeEventListener("keydown", onKey)
}
