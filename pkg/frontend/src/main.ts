import { ProtocolClient } from "./protocol.js";
import { WitnessSession } from "./session.js";
import { WitnessView } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("server") ?? "";
const client = new ProtocolClient(base);
const session = new WitnessSession(client);

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
new WitnessView(root, session);

const existing = params.get("session");
if (existing) {
  // page reload: rebuild the identical view from the server
  void session.attach(existing);
} else {
  void session.start().then(() => {
    if (session.state.sessionId) {
      params.set("session", session.state.sessionId);
      window.history.replaceState(null, "", `?${params.toString()}`);
    }
  });
}
