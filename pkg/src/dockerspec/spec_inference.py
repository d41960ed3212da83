"""Infer a structured spec from a parsed Dockerfile.

Three steps: read the OS from the base-image reference, collect dependencies
from the image name and from install-comment scopes, then derive the package
manager and the capability flags from the instruction stream.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass

from .dockerfile_syntax import (
    CommentLine,
    DockerfileDocument,
    ShellStatement,
    parse_exec_form,
    parse_shell,
)
from .errors import InferenceIncomplete, MalformedFrom
from .spec_model import DockerSpec, WordLists, allowed_managers

_WORD_SEPARATORS = re.compile(r"[-_]")
_SEGMENT_SEPARATORS = re.compile(r"[-_.]")
_URL = re.compile(r"[a-z][a-z0-9+.-]*://", re.IGNORECASE)
_REDIRECTION_PREFIX = re.compile(r"\d*(>>|>|<)")
_NUMERIC_TAG = re.compile(r"(?=.*\d)[\d.]+$")

_DOWNLOAD_COMMANDS = ("wget", "curl")
_CLONE_COMMANDS = ("git", "hg")
_VCS_PREFIXES = ("git+", "hg+", "svn+", "bzr+")

_FLAG_FOR_KIND = {
    "ENV": "uses_env",
    "ARG": "uses_arg",
    "LABEL": "uses_label",
    "EXPOSE": "uses_expose",
    "CMD": "uses_cmd",
    "ENTRYPOINT": "uses_entrypoint",
}


@dataclass(frozen=True)
class ImageReference:
    """A FROM argument split into name, optional tag, and their words."""

    name: str
    tag: str | None
    name_words: tuple[str, ...]
    tag_words: tuple[str, ...]


@dataclass(frozen=True)
class CommentScope:
    """A candidate-bearing comment plus the RUN statements it covers
    (everything up to the next comment line or blank line)."""

    comment: CommentLine
    candidate_dependencies: tuple[str, ...]
    run_statements: tuple[ShellStatement, ...]


def _split_words(text: str) -> tuple[str, ...]:
    return tuple(w for w in _WORD_SEPARATORS.split(text.lower()) if w)


def split_image_reference(from_args: str) -> ImageReference:
    """Split a FROM argument into name/tag and their lowercase words.

    The tag separator is the last ":" after the last "/" (a colon inside a
    registry host:port is not a tag). Only the final path segment of a
    registry-qualified name contributes name words. ``--platform`` flags,
    stage aliases, and digests are ignored.
    """
    tokens = [t for t in from_args.split() if not t.startswith("--")]
    if not tokens:
        raise MalformedFrom(f"no image reference in {from_args!r}")
    image = tokens[0].split("@", 1)[0]
    colon = image.rfind(":")
    if colon >= 0 and "/" not in image[colon + 1:]:
        name, tag = image[:colon], image[colon + 1:]
    else:
        name, tag = image, ""
    name_words = _split_words(name.split("/")[-1])
    if not name or not name_words:
        raise MalformedFrom(f"empty image name in {from_args!r}")
    return ImageReference(name, tag or None, name_words, _split_words(tag))


def infer_os(ref: ImageReference, lists: WordLists) -> str:
    """First OS word found scanning tag words then name words, or "any".

    A match in the name gets the purely numeric tag words appended (dots
    dropped), so ``debian:10-slim`` becomes ``debian10``.
    """
    for word in ref.tag_words:
        if word in lists.os_words:
            return word
    for word in ref.name_words:
        if word in lists.os_words:
            version = "".join(
                w.replace(".", "") for w in ref.tag_words if _NUMERIC_TAG.match(w))
            return word + version
    return "any"


def infer_from_dependencies(ref: ImageReference, lists: WordLists) -> set[str]:
    """Image-name words that survive OS-word, stop-word, and
    non-alphabetic-leading removal."""
    return {
        w for w in ref.name_words
        if w[0].isalpha() and w not in lists.os_words and w not in lists.stop_words
    }


def extract_comment_candidates(comment: CommentLine, stop_words: frozenset[str]) -> list[str]:
    """Candidate dependency words from an install comment.

    Returns the lowercase content words following the first "install" token
    (case-insensitive), with stop words and punctuation-only tokens dropped;
    empty when the comment does not mention "install".
    """
    tokens = [t.strip(string.punctuation).lower() for t in comment.text.split()]
    try:
        start = tokens.index("install") + 1
    except ValueError:
        return []
    return [t for t in tokens[start:] if t and t not in stop_words]


def _strip_redirections(arguments: tuple[str, ...]) -> list[str]:
    kept = []
    skip_next = False
    for arg in arguments:
        if skip_next:
            skip_next = False
            continue
        match = _REDIRECTION_PREFIX.match(arg)
        if match:
            # a bare operator redirects into the following word; ">file" and
            # "2>&1" are self-contained
            skip_next = match.end() == len(arg)
            continue
        kept.append(arg)
    return kept


def _install_arguments(stmt: ShellStatement) -> list[str]:
    """Package arguments of a recognized install statement (flags, variable
    references, and the subcommand itself excluded); [] otherwise."""
    args = _strip_redirections(stmt.arguments)
    command = stmt.command
    subcommand = None
    if command in ("apt", "apt-get", "yum") and "install" in args:
        subcommand = "install"
    elif command == "apk" and "add" in args:
        subcommand = "add"
    elif command in ("pip", "pip3") and "install" in args:
        subcommand = "install"
    elif command == "npm" and args and args[0] in ("install", "i"):
        subcommand = args[0]
    if subcommand is None:
        return []
    packages = []
    seen_subcommand = False
    for arg in args:
        if not seen_subcommand and arg == subcommand:
            seen_subcommand = True
        elif not arg.startswith(("-", "$")):
            packages.append(arg)
    return packages


def _url_arguments(stmt: ShellStatement) -> list[str]:
    command = stmt.command
    args = _strip_redirections(stmt.arguments)
    if command in _DOWNLOAD_COMMANDS:
        return [a for a in args if _URL.match(a)]
    if command in _CLONE_COMMANDS and args and args[0] == "clone":
        return [a for a in args if _URL.match(a) or a.startswith("git@")]
    return []


def _url_final_segment(url: str) -> str:
    path = url.split("://", 1)[-1].rstrip("/")
    return path.rsplit("/", 1)[-1]


def extract_installable_args(statements: list[ShellStatement]) -> set[str]:
    """Words a statement list could be installing.

    Union over statements of package-manager install arguments and
    download-command URLs; every collected argument also contributes its
    words (split on ``-``, ``_``, ``.``), and URLs contribute the words of
    their final path segment. Everything is lowercased.
    """
    words: set[str] = set()

    def add(arg: str) -> None:
        arg = arg.lower()
        words.add(arg)
        words.update(w for w in _SEGMENT_SEPARATORS.split(arg) if w)

    for stmt in statements:
        for arg in _install_arguments(stmt):
            add(arg)
        for url in _url_arguments(stmt):
            words.add(url.lower())
            add(_url_final_segment(url))
    return words


def _statements_of(doc: DockerfileDocument, instruction) -> list[ShellStatement]:
    elements = parse_exec_form(instruction.raw_arguments)
    if elements is not None:
        if not elements:
            return []
        return [ShellStatement(elements[0], tuple(elements[1:]))]
    return parse_shell(instruction.raw_arguments)


def comment_scopes(doc: DockerfileDocument, lists: WordLists) -> list[CommentScope]:
    """Build the install-comment scopes of a document.

    A scope covers the RUN instructions starting after the comment and
    before the next comment line or blank line, whichever comes first.
    """
    boundary_lines = sorted(
        {c.line for c in doc.comments} | set(doc.blank_lines))
    scopes = []
    for comment in doc.comments:
        candidates = extract_comment_candidates(comment, lists.stop_words)
        if not candidates:
            continue
        terminator = next(
            (b for b in boundary_lines if b > comment.line), float("inf"))
        statements: list[ShellStatement] = []
        for inst in doc.instructions_of_kind("RUN"):
            if comment.line < inst.line_span[0] < terminator:
                statements.extend(_statements_of(doc, inst))
        scopes.append(CommentScope(comment, tuple(candidates), tuple(statements)))
    return scopes


def infer_comment_dependencies(doc: DockerfileDocument, lists: WordLists) -> set[str]:
    """Comment candidates confirmed by an install argument in their scope."""
    accepted: set[str] = set()
    for scope in comment_scopes(doc, lists):
        installable = extract_installable_args(list(scope.run_statements))
        accepted.update(c for c in scope.candidate_dependencies if c in installable)
    return accepted


def infer_flags(doc: DockerfileDocument) -> dict[str, bool]:
    """The six instruction-presence flags (kind-level: ONBUILD CMD does not
    count as CMD)."""
    kinds = {inst.kind for inst in doc.instructions}
    return {flag: kind in kinds for kind, flag in _FLAG_FOR_KIND.items()}


def _all_run_statements(doc: DockerfileDocument) -> list[ShellStatement]:
    statements: list[ShellStatement] = []
    for inst in doc.instructions_of_kind("RUN"):
        statements.extend(_statements_of(doc, inst))
    return statements


def infer_pkg_manager(doc: DockerfileDocument, os_name: str) -> str:
    """The unique package manager whose install/add subcommand appears in the
    RUN statements; "any" when none, several, or incoherent with the OS."""
    detected = set()
    for stmt in _all_run_statements(doc):
        if stmt.command in ("apt", "apt-get") and "install" in stmt.arguments:
            detected.add("apt")
        elif stmt.command == "apk" and "add" in stmt.arguments:
            detected.add("apk")
        elif stmt.command == "yum" and "install" in stmt.arguments:
            detected.add("yum")
    if len(detected) != 1:
        return "any"
    manager = detected.pop()
    return manager if manager in allowed_managers(os_name) else "any"


def infer_downloads_external(doc: DockerfileDocument) -> bool:
    """True when some RUN statement downloads or installs from outside the
    package manager: URL downloads/clones, pip/npm VCS or URL installs, or a
    low-level package tool applied to a local file."""
    for stmt in _all_run_statements(doc):
        if _url_arguments(stmt):
            return True
        command, args = stmt.command, stmt.arguments
        if command in ("pip", "pip3") and "install" in args:
            if any(_URL.match(a) or a.startswith(_VCS_PREFIXES) for a in args):
                return True
        if command == "npm" and args and args[0] in ("install", "i"):
            if any(_URL.match(a) or a.startswith(_VCS_PREFIXES) for a in args[1:]):
                return True
        if command == "dpkg" and any(a == "--install" or
                                     (a.startswith("-") and not a.startswith("--") and "i" in a)
                                     for a in args):
            return True
        if command == "rpm" and any(a in ("--install", "--upgrade") or
                                    (a.startswith("-") and not a.startswith("--")
                                     and ("i" in a or "U" in a))
                                    for a in args):
            return True
        if command == "apk" and "add" in args and any(a.endswith(".apk") for a in args):
            return True
    return False


def infer_spec(doc: DockerfileDocument, lists: WordLists) -> DockerSpec:
    """Run the full inference: OS, dependencies, package manager, and flags.

    Raises InferenceIncomplete when a sub-step cannot produce its field
    (no FROM instruction, unusable image reference); shell syntax errors
    propagate as parse errors.
    """
    froms = doc.instructions_of_kind("FROM")
    if not froms:
        raise InferenceIncomplete("document has no FROM instruction")
    try:
        ref = split_image_reference(froms[0].raw_arguments)
    except MalformedFrom as exc:
        raise InferenceIncomplete(str(exc)) from exc

    os_name = infer_os(ref, lists)
    dependencies = infer_from_dependencies(ref, lists)
    dependencies |= infer_comment_dependencies(doc, lists)
    dependencies = {
        d for d in dependencies
        if d[0].isalpha() and d not in lists.os_words and d not in lists.stop_words
    }
    return DockerSpec(
        os=os_name,
        pkg_manager=infer_pkg_manager(doc, os_name),
        dependencies=frozenset(dependencies),
        downloads_external=infer_downloads_external(doc),
        **infer_flags(doc),
    )
