import { SessionController } from "./session"
import { mount } from "./ui"

const params = new URLSearchParams(window.location.search)
const sessionId = params.get("session")
const base = params.get("api") ?? ""

const root = document.getElementById("app")
if (!root) throw new Error("missing #app container")
if (!sessionId) {
  root.textContent = "Missing ?session=<id> in the URL."
} else {
  mount(root, new SessionController(base, sessionId))
}
