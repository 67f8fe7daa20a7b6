"""Desk-scale agent pipeline: scripted speech and embedding replay drive the
naming engine over the shared space.

The replay source stands in for a microphone + transcription chain and a
camera + feature extractor: spoken lines are written as text to the ``audio``
key, shown objects as embedding ids to the ``camera`` key. The agents wired
on top mirror a live deployment:

* transcriber: ``audio`` → ``text`` (identity on replayed text);
* perception: ``camera`` → resolves the id and writes the vector to
  ``features``, optionally with a simulated processing delay — when it is
  slower than the shows, intermediate frames are dropped and it always picks
  up the newest one;
* control: ``text`` → parses the command, talks to the naming engine, posts
  the recognized name (with limited validity, so it disappears by itself)
  and the reply to speak;
* speech: simulates synthesis: flags ``speaking`` for the utterance duration,
  appends the robot line to the transcript, and emits the spoken text on
  ``speech_out``;
* viewer/lips: periodic observers of ``name`` and ``speaking``.

Because the replayed robot voice would be transcribed like anyone else's,
the control agent masks the ``audio`` key with a high-priority blocker for
the duration of its own speech; the feedback of its own words then arrives
at normal priority and is discarded by the space, never reaching the parser.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from typing import Iterable

from .blackboard import Space
from .clock import VirtualClock, WallClock
from .embeddings import EmbeddingSet
from .engine import Named, NamingConfig, NamingEngine

# Blocking payload the control agent writes over ``audio`` while speaking.
AUDIO_BLOCKER = object()

USER = "User"
ROBOT = "Robot"

ANSWER_OK = "O.K."
ANSWER_NO_IDEA = "I have no idea."
ANSWER_NO_SIGHT = "I see nothing."


# -- commands -----------------------------------------------------------------


@dataclass(frozen=True)
class Name:
    word: str


@dataclass(frozen=True)
class Ask:
    pass


@dataclass(frozen=True)
class Correct:
    word: str


@dataclass(frozen=True)
class Unrecognized:
    raw: str


Command = Name | Ask | Correct | Unrecognized

_PUNCT = ".,!?;:\"'"

_ASK_RE = re.compile(r"^(what\s+is|what'?s)\s+(this|that|it)$")
_CORRECT_RE = re.compile(r"^no\W*\s*(this|it)\s+is\s+(?:(a|an|the)\s+)?(?P<word>.+)$")
_IT_IS_RE = re.compile(r"^it\s+is\s+(?:(a|an|the)\s+)?(?P<word>.+)$")
_NAME_RE = re.compile(r"^this\s+is\s+(?:(a|an|the)\s+)?(?P<word>.+)$")


def parse_command(text: str) -> Command:
    """Map an utterance to a command; total, case-insensitive, tolerant of
    surrounding punctuation. Anything that is not a recognized phrasing comes
    back as :class:`Unrecognized`."""
    if not isinstance(text, str):
        return Unrecognized(repr(text))
    cleaned = text.strip().strip(_PUNCT).strip().lower()
    if not cleaned:
        return Unrecognized(text)
    # The correction pattern must win before the plain naming pattern:
    # "no, this is a bottle" contains "this is a bottle".
    match = _CORRECT_RE.match(cleaned)
    if match:
        word = match.group("word").strip(_PUNCT).strip()
        return Correct(word) if word else Unrecognized(text)
    if _ASK_RE.match(cleaned):
        return Ask()
    match = _NAME_RE.match(cleaned)
    if match:
        word = match.group("word").strip(_PUNCT).strip()
        return Name(word) if word else Unrecognized(text)
    match = _IT_IS_RE.match(cleaned)
    if match:
        # "it is a ..." is the short correction phrasing.
        word = match.group("word").strip(_PUNCT).strip()
        return Correct(word) if word else Unrecognized(text)
    return Unrecognized(text)


def respond(engine: NamingEngine, features, command: Command) -> tuple[str | None, Named | None]:
    """The control policy: what the robot says for a command.

    ``features`` is the current feature vector or ``None`` when nothing has
    been seen. Returns ``(reply, named)``: the reply is ``None`` for
    utterances that need no answer, and ``named`` carries the recognition
    outcome when the reply names an object.
    """
    if isinstance(command, Unrecognized):
        return None, None
    if features is None:
        return ANSWER_NO_SIGHT, None
    if isinstance(command, Ask):
        outcome = engine.ask(features)
        if isinstance(outcome, Named):
            return f"This is a {outcome.name}.", outcome
        return ANSWER_NO_IDEA, None
    if isinstance(command, Name):
        engine.teach(command.word, features)
        return ANSWER_OK, None
    if isinstance(command, Correct):
        engine.correct(command.word, features)
        return ANSWER_OK, None
    return None, None


# -- scenario scripts -----------------------------------------------------------


@dataclass(frozen=True)
class Show:
    ref: str


@dataclass(frozen=True)
class Say:
    text: str


@dataclass(frozen=True)
class Wait:
    seconds: float


Step = Show | Say | Wait


def parse_scenario(text: str) -> list[Step]:
    """Parse a scenario script: one step per line.

    ``show <embedding-id>``, ``say <text>``, ``wait <seconds>``. Blank lines
    and lines starting with ``#`` are skipped.
    """
    steps: list[Step] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        op, _, rest = line.partition(" ")
        rest = rest.strip()
        if op == "show" and rest:
            steps.append(Show(rest))
        elif op == "say" and rest:
            steps.append(Say(rest))
        elif op == "wait" and rest:
            try:
                seconds = float(rest)
            except ValueError:
                raise ValueError(f"line {lineno}: bad wait duration {rest!r}")
            if seconds < 0:
                raise ValueError(f"line {lineno}: wait duration is negative")
            steps.append(Wait(seconds))
        else:
            raise ValueError(f"line {lineno}: cannot parse step {line!r}")
    return steps


def load_scenario(path) -> list[Step]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# -- transcript -----------------------------------------------------------------


@dataclass(frozen=True)
class Utterance:
    time: float
    source: str  # USER or ROBOT
    text: str


class Transcript:
    def __init__(self) -> None:
        self._entries: list[Utterance] = []
        self._lock = threading.Lock()

    def append(self, time: float, source: str, text: str) -> None:
        with self._lock:
            self._entries.append(Utterance(time, source, text))

    @property
    def entries(self) -> list[Utterance]:
        with self._lock:
            return list(self._entries)

    def lines(self) -> list[str]:
        return [f"[{u.time:.3f}] {u.source}: {u.text}" for u in self.entries]

    def robot_lines(self) -> list[str]:
        return [u.text for u in self.entries if u.source == ROBOT]

    def __str__(self) -> str:
        return "\n".join(self.lines())


# -- pipeline -----------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for the replayed system.

    Speech is simulated at ``seconds_per_word`` per word; the audio blocker
    covers exactly the utterance duration plus ``inhibition_pad``. The
    recognized name stays readable for ``name_validity`` seconds and then
    disappears on its own.
    """

    angle_step: float = 0.2
    temperature: float | None = None
    relevance_threshold: float | None = None
    normalize_similarities: bool = False
    seconds_per_word: float = 0.06
    inhibition_pad: float = 0.0
    inhibition_priority: float = 2.0
    name_validity: float = 1.0
    audio_validity: float = 1.0
    text_validity: float = 1.0
    features_validity: float | None = None
    perception_delay: float = 0.0
    feedback: bool = False
    inhibit_own_speech: bool = True
    viewer_period: float = 0.05
    lips_period: float = 0.05

    def naming_config(self, dim: int) -> NamingConfig:
        return NamingConfig(
            dim=dim,
            angle_step=self.angle_step,
            temperature=self.temperature,
            relevance_threshold=self.relevance_threshold,
            normalize_similarities=self.normalize_similarities,
        )


@dataclass
class ProcessedCommand:
    time: float
    text: str
    command: Command


@dataclass
class PipelineResult:
    transcript: Transcript
    responses: list[str]
    processed: list[ProcessedCommand]
    viewer_log: list[tuple[float, str]]
    speaking_transitions: list[tuple[float, bool]]
    features_history: list[str]
    engine: NamingEngine


class _Perception:
    def __init__(self, space: Space, vectors: dict, refs_seen: list[str],
                 config: PipelineConfig) -> None:
        self.space = space
        self.vectors = vectors
        self.refs_seen = refs_seen
        self.config = config
        self.agent = None  # set after spawn

    def on_frame(self, ref) -> None:
        vector = self.vectors[ref]

        def emit() -> None:
            self.refs_seen.append(ref)
            self.space.write(
                "features", vector, validity=self.config.features_validity
            )

        if self.config.perception_delay > 0:
            self.agent.hold(self.config.perception_delay)
            self.space.call_later(self.config.perception_delay, emit)
        else:
            emit()


class _Control:
    def __init__(self, space: Space, engine: NamingEngine,
                 config: PipelineConfig) -> None:
        self.space = space
        self.engine = engine
        self.config = config
        self.processed: list[ProcessedCommand] = []

    def on_text(self, text) -> None:
        command = parse_command(text)
        self.processed.append(ProcessedCommand(self.space.now(), text, command))
        features = self.space.read("features")
        reply, named = respond(self.engine, features, command)
        if reply is None:
            return
        if named is not None:
            # Posted with limited validity: the display clears by itself.
            self.space.write("name", named.name, validity=self.config.name_validity)
        self._speak(reply)

    def _speak(self, text: str) -> None:
        duration = max(1, len(text.split())) * self.config.seconds_per_word
        if self.config.inhibit_own_speech:
            # Mask the audio channel before the voice can come back around.
            self.space.write(
                "audio",
                AUDIO_BLOCKER,
                validity=duration + self.config.inhibition_pad,
                priority=self.config.inhibition_priority,
            )
        self.space.write("say", text, validity=duration)


class _Speech:
    def __init__(self, space: Space, transcript: Transcript,
                 config: PipelineConfig) -> None:
        self.space = space
        self.transcript = transcript
        self.config = config

    def on_say(self, text) -> None:
        duration = max(1, len(str(text).split())) * self.config.seconds_per_word
        self.space.write("speaking", True, validity=duration)
        self.transcript.append(self.space.now(), ROBOT, str(text))
        self.space.write("speech_out", text, validity=duration)


def run_pipeline(
    script: Iterable[Step],
    embeddings: EmbeddingSet,
    config: PipelineConfig | None = None,
    *,
    clock: str = "virtual",
    engine: NamingEngine | None = None,
) -> PipelineResult:
    """Replay a scenario script through the agent system and return what
    happened.

    ``clock="virtual"`` (the default) pumps all agents cooperatively on
    virtual time, so a given script and embedding set always produce the same
    transcript. ``clock="wall"`` runs every agent on its own thread in real
    time, like a live deployment. Pass ``engine`` (say, restored from a saved
    session) to continue from existing associations instead of a fresh one.
    """
    config = config or PipelineConfig()
    steps = list(script)
    missing = sorted(
        {s.ref for s in steps if isinstance(s, Show)} - set(embeddings.ids())
    )
    if missing:
        raise ValueError(f"script shows unknown embedding ids: {missing}")
    if clock not in ("virtual", "wall"):
        raise ValueError(f"clock must be 'virtual' or 'wall', got {clock!r}")
    cooperative = clock == "virtual"

    space = Space(
        clock=VirtualClock() if cooperative else WallClock(),
        cooperative=cooperative,
    )
    if engine is None:
        engine = NamingEngine(config.naming_config(embeddings.dim))
    elif engine.config.dim != embeddings.dim:
        raise ValueError(
            f"session dimension {engine.config.dim} does not match the "
            f"embedding set's {embeddings.dim}"
        )
    transcript = Transcript()
    viewer_log: list[tuple[float, str]] = []
    speaking_transitions: list[tuple[float, bool]] = []
    refs_seen: list[str] = []

    vectors = {record.id: record.vector for record in embeddings.records}
    perception = _Perception(space, vectors, refs_seen, config)
    control = _Control(space, engine, config)
    speech = _Speech(space, transcript, config)

    def transcribe(value) -> None:
        if value is AUDIO_BLOCKER or not isinstance(value, str):
            return
        space.write("text", value, validity=config.text_validity)

    last_speaking = [False]

    def watch_lips() -> None:
        speaking = bool(space.read("speaking", False))
        if speaking != last_speaking[0]:
            speaking_transitions.append((space.now(), speaking))
            last_speaking[0] = speaking

    def watch_view() -> None:
        viewer_log.append((space.now(), space.read("name", "")))

    space.spawn_triggered("audio", transcribe, name="transcriber")
    perception.agent = space.spawn_triggered(
        "camera", perception.on_frame, name="perception"
    )
    space.spawn_triggered("text", control.on_text, name="control")
    space.spawn_triggered("say", speech.on_say, name="speech")
    if config.feedback:
        def feed_back(text) -> None:
            space.write("audio", text, validity=config.audio_validity, priority=1.0)

        space.spawn_triggered("speech_out", feed_back, name="feedback")
    space.spawn_timed(config.viewer_period, watch_view, name="viewer")
    space.spawn_timed(config.lips_period, watch_lips, name="lips")

    def settle() -> None:
        if cooperative:
            space.pump()
        else:
            space._clock.sleep(0.03)

    try:
        for step in steps:
            if isinstance(step, Say):
                transcript.append(space.now(), USER, step.text)
                space.write(
                    "audio", step.text, validity=config.audio_validity, priority=1.0
                )
                settle()
            elif isinstance(step, Show):
                space.write("camera", step.ref)
                settle()
            elif isinstance(step, Wait):
                if cooperative:
                    space.advance(step.seconds)
                else:
                    space._clock.sleep(step.seconds)
        settle()
    finally:
        space.stop_all()

    return PipelineResult(
        transcript=transcript,
        responses=transcript.robot_lines(),
        processed=control.processed,
        viewer_log=viewer_log,
        speaking_transitions=speaking_transitions,
        features_history=refs_seen,
        engine=engine,
    )
