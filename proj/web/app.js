// Minimal client for the play server. Renders only what the server sends.
const COLORS = ["#c33", "#36c", "#3a3", "#cc3", "#eee"];
const $ = (id) => document.getElementById(id);
const ws = new WebSocket(`ws://${location.host}/ws`);
let seq = 0;
let pending = false;

function log(m) { $("log").textContent = JSON.stringify(m) + "\n" + $("log").textContent; }

function cardDiv(card, knowledge) {
  const d = document.createElement("div");
  d.className = "card";
  if (card) {
    d.style.background = COLORS[card.color % COLORS.length];
    d.textContent = card.rank + 1;
  } else {
    d.classList.add("unknown");
    d.textContent = knowledge ? knowledge.label : "?";
  }
  return d;
}

function label(k) {
  if (!k) return "?";
  const c = k.possible_colors.length === 1 ? "c" + k.possible_colors[0] : "";
  const r = k.possible_ranks.length === 1 ? String(k.possible_ranks[0] + 1) : "";
  return (c + r) || "?";
}

function render(view) {
  $("partner").replaceChildren(...(view.partner_hand || []).map((c) => cardDiv(c)));
  $("mine").replaceChildren(...(view.own_knowledge || []).map((k) => cardDiv(null, { label: label(k) })));
  $("board").textContent =
    `fireworks ${JSON.stringify(view.fireworks)}  hints ${view.hint_tokens}  lives ${view.lives}  deck ${view.deck_size}`;
}

function showActions(legal) {
  const box = $("actions");
  box.replaceChildren();
  for (const { action } of legal) {
    const b = document.createElement("button");
    b.textContent = JSON.stringify(action);
    b.onclick = () => {
      if (pending) return;
      pending = true;
      for (const x of box.querySelectorAll("button")) x.disabled = true;
      ws.send(JSON.stringify({ type: "action", seq, action }));
    };
    box.appendChild(b);
  }
}

ws.onmessage = (ev) => {
  const m = JSON.parse(ev.data);
  log(m);
  if (typeof m.seq === "number") seq = m.seq;
  switch (m.type) {
    case "hello": $("status").textContent = `session ${m.session}, seat ${m.seat}`; break;
    case "observation": render(m.view); break;
    case "your_turn": pending = false; showActions(m.legal_actions); $("status").textContent = "your turn"; break;
    case "action_rejected": pending = false; $("status").textContent = `rejected: ${m.code}`; break;
    case "move_made": $("actions").replaceChildren(); $("status").textContent = "waiting"; break;
    case "game_over": $("status").textContent = `game over: ${m.score} (${m.reason})`; break;
  }
};
ws.onclose = () => { $("status").textContent += " [disconnected]"; };
