"""
Dataset manifest: a JSON list of utterances.

    [{"utterance_id": "...", "speaker_id": "...", "wav_path": "..."}, ...]

Optional keys: "gender" ("M"/"F") and "phones" ([start, end, phone_id]
sample segments, written by the toy corpus generator).
"""

import json
from collections import OrderedDict
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, TypeAdapter, ValidationError

from sigvc.errors import ConfigValidationError, EmptyInputError, FeatureIOError


class ManifestEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    utterance_id: str
    speaker_id: str
    wav_path: str
    gender: Optional[Literal["M", "F"]] = None
    phones: Optional[List[Tuple[int, int, int]]] = None


_ENTRIES = TypeAdapter(List[ManifestEntry])


def load_manifest(path: Union[str, Path], allow_empty: bool = False) -> List[ManifestEntry]:
    """Read a manifest; relative wav paths are resolved against its directory"""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise FeatureIOError(f"Cannot read manifest {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigValidationError(f"Manifest {path} is not valid JSON: {e}") from e

    try:
        entries = _ENTRIES.validate_python(raw)
    except ValidationError as e:
        raise ConfigValidationError(f"Manifest {path} is malformed: {e.errors()[0]['msg']}") from e

    if not entries and not allow_empty:
        raise EmptyInputError(f"Manifest {path} lists no utterances")

    for entry in entries:
        wav = Path(entry.wav_path)
        if not wav.is_absolute():
            entry.wav_path = str((path.parent / wav).resolve())
    return entries


def write_manifest(path: Union[str, Path], entries: List[ManifestEntry]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = [e.model_dump(mode="json", exclude_none=True) for e in entries]
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return path


def group_by_speaker(entries: List[ManifestEntry]) -> "OrderedDict[str, List[ManifestEntry]]":
    """Speaker -> utterances, in first-appearance order"""
    groups: "OrderedDict[str, List[ManifestEntry]]" = OrderedDict()
    for entry in entries:
        groups.setdefault(entry.speaker_id, []).append(entry)
    return groups


def speaker_genders(entries: List[ManifestEntry]) -> Dict[str, Optional[str]]:
    return {e.speaker_id: e.gender for e in entries}


def manifest_from_directory(root: Union[str, Path]) -> List[ManifestEntry]:
    """
    Build entries from <root>/<speaker_id>/*.wav. Utterance ids are
    "<speaker_id>_<file stem>".
    """
    root = Path(root)
    if not root.is_dir():
        raise FeatureIOError(f"Corpus directory {root} does not exist")
    entries = []
    for speaker_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for wav in sorted(speaker_dir.glob("*.wav")):
            entries.append(ManifestEntry(
                utterance_id=f"{speaker_dir.name}_{wav.stem}",
                speaker_id=speaker_dir.name,
                wav_path=str(wav.resolve()),
            ))
    return entries


def load_corpus(path: Union[str, Path], allow_empty: bool = False) -> List[ManifestEntry]:
    """A manifest JSON file or a directory of per-speaker WAV folders"""
    path = Path(path)
    if path.is_dir():
        entries = manifest_from_directory(path)
        if not entries and not allow_empty:
            raise EmptyInputError(f"Corpus directory {path} holds no <speaker>/*.wav files")
        return entries
    return load_manifest(path, allow_empty=allow_empty)
