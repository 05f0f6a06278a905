# ledger.py
"""Simulated append-only ledger with two-branch timelocked lock boxes.

A box is either ``SingleKey(pk)`` or ``TimeLocked(pk_tmp, T, pk_fallback)``.
The latter is the CLTV-style script

    IF <pk_tmp> CHECKSIG
    ELSE <T> CHECKLOCKTIMEVERIFY DROP <pk_fallback> CHECKSIG

so pk_tmp may spend at any height and pk_fallback only once height >= T.
Transactions carry one signature per input over ``tx.message``, which
serializes inputs and outputs but never witnesses. There are no fees.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from adaptor import Signature, vrfy
from algebra import FieldReader, GroupElement, as_bytes, encode_fields
from errors import InvalidParameter, LedgerRejection, MalformedEncoding, ProSwapError, RejectReason

logger = logging.getLogger(__name__)

Coins = Union[Fraction, int]


@dataclass(frozen=True)
class SingleKey:
    pk: GroupElement

    def to_bytes(self) -> bytes:
        return encode_fields(b"P2PK", self.pk.to_bytes())


@dataclass(frozen=True)
class TimeLocked:
    pk_tmp: GroupElement
    timeout: int
    pk_fallback: GroupElement

    def to_bytes(self) -> bytes:
        return encode_fields(b"CLTV", self.pk_tmp.to_bytes(), as_bytes(self.timeout), self.pk_fallback.to_bytes())


Condition = Union[SingleKey, TimeLocked]


def decode_condition(data: bytes) -> Condition:
    reader = FieldReader(data)
    kind = reader.take()
    if kind == b"P2PK":
        cond = SingleKey(reader.element())
    elif kind == b"CLTV":
        cond = TimeLocked(reader.element(), reader.integer(), reader.element())
    else:
        raise MalformedEncoding(f"unknown condition type {kind!r}")
    reader.done()
    return cond


def _value_bytes(value: Fraction) -> bytes:
    return str(Fraction(value)).encode("ascii")


def _parse_value(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise MalformedEncoding(f"bad coin amount {text!r}") from e
    if value < 0:
        raise MalformedEncoding(f"negative coin amount {text!r}")
    return value


@dataclass(frozen=True, order=True)
class Outpoint:
    txid: str
    index: int

    def to_bytes(self) -> bytes:
        return encode_fields(bytes.fromhex(self.txid), as_bytes(self.index))

    def __str__(self) -> str:
        return f"{self.txid}:{self.index}"

    @classmethod
    def parse(cls, text: str) -> "Outpoint":
        txid, sep, index = text.rpartition(":")
        if not sep or not index.isdigit():
            raise MalformedEncoding(f"bad outpoint {text!r}")
        try:
            bytes.fromhex(txid)
        except ValueError as e:
            raise MalformedEncoding(f"bad outpoint {text!r}") from e
        return cls(txid, int(index))


@dataclass(frozen=True)
class TxOutput:
    value: Fraction
    condition: Condition

    def to_bytes(self) -> bytes:
        return encode_fields(_value_bytes(self.value), self.condition.to_bytes())


@dataclass(frozen=True)
class LockBox:
    id: Outpoint
    value: Fraction
    condition: Condition


@dataclass(frozen=True)
class LedgerTx:
    inputs: Tuple[Outpoint, ...]
    outputs: Tuple[TxOutput, ...]
    witness: Tuple[Signature, ...] = ()

    @property
    def message(self) -> bytes:
        return encode_fields(
            b"TX",
            as_bytes(len(self.inputs)),
            *(i.to_bytes() for i in self.inputs),
            as_bytes(len(self.outputs)),
            *(o.to_bytes() for o in self.outputs),
        )

    @property
    def txid(self) -> str:
        return hashlib.sha256(self.message).hexdigest()

    def with_witness(self, *sigs: Signature) -> "LedgerTx":
        return replace(self, witness=tuple(sigs))

    def outpoint(self, index: int) -> Outpoint:
        return Outpoint(self.txid, index)


def transfer(box: LockBox, condition: Condition) -> LedgerTx:
    """Unsigned tx moving a whole box to a new condition."""
    return LedgerTx((box.id,), (TxOutput(box.value, condition),))


@dataclass(frozen=True)
class LogEntry:
    height: int
    tx: LedgerTx


@dataclass(frozen=True)
class LedgerView:
    """Immutable snapshot for readers."""
    chain: str
    height: int
    log: Tuple[LogEntry, ...]
    boxes: Mapping[Outpoint, LockBox]


class LedgerState:
    """Append-only log, live box table and block-height clock. One writer at a time."""

    def __init__(self, chain: str = "main"):
        self.chain = chain
        self.height = 0
        self.log: List[LogEntry] = []
        self.boxes: Dict[Outpoint, LockBox] = {}

    @classmethod
    def genesis(cls, allocations: Iterable[Tuple[GroupElement, Coins]], chain: str = "main") -> "LedgerState":
        allocations = [(pk, Fraction(v)) for pk, v in allocations]
        for _, value in allocations:
            if value < 0:
                raise InvalidParameter(f"genesis allocation must be non-negative, got {value}")
        state = cls(chain)
        outputs = tuple(TxOutput(v, SingleKey(pk)) for pk, v in allocations)
        genesis_id = hashlib.sha256(
            encode_fields(b"GENESIS", chain.encode("utf-8"), *(o.to_bytes() for o in outputs))
        ).hexdigest()
        for index, out in enumerate(outputs):
            op = Outpoint(genesis_id, index)
            state.boxes[op] = LockBox(op, out.value, out.condition)
        logger.debug("genesis on %s with %d boxes", chain, len(outputs))
        return state

    def _reject(self, reason: RejectReason, detail: str):
        logger.info("%s rejected tx: %s %s", self.chain, reason.value, detail)
        raise LedgerRejection(reason, detail)

    def _authorize(self, box: LockBox, message: bytes, sig: Signature) -> None:
        cond = box.condition
        if isinstance(cond, SingleKey):
            if not vrfy(cond.pk, message, sig):
                self._reject(RejectReason.UNAUTHORIZED, f"bad signature for {box.id}")
            return
        if vrfy(cond.pk_tmp, message, sig):
            return
        if vrfy(cond.pk_fallback, message, sig):
            if self.height < cond.timeout:
                self._reject(RejectReason.TIMELOCK, f"{box.id} locked until height {cond.timeout}")
            return
        self._reject(RejectReason.UNAUTHORIZED, f"no spending branch of {box.id} accepts the signature")

    def post(self, tx: LedgerTx) -> str:
        """Validate and apply tx atomically; returns its id or raises LedgerRejection."""
        if not tx.inputs or len(set(tx.inputs)) != len(tx.inputs):
            self._reject(RejectReason.MALFORMED, "inputs must be non-empty and distinct")
        if len(tx.witness) != len(tx.inputs):
            self._reject(RejectReason.UNAUTHORIZED, "one signature per input required")
        if any(Fraction(o.value) < 0 for o in tx.outputs):
            self._reject(RejectReason.MALFORMED, "negative output")
        spent = []
        for outpoint in tx.inputs:
            box = self.boxes.get(outpoint)
            if box is None:
                self._reject(RejectReason.UNKNOWN_OUTPOINT, str(outpoint))
            spent.append(box)
        message = tx.message
        for box, sig in zip(spent, tx.witness):
            self._authorize(box, message, sig)
        if sum(b.value for b in spent) != sum(Fraction(o.value) for o in tx.outputs):
            self._reject(RejectReason.CONSERVATION, "inputs and outputs differ in value")

        txid = tx.txid
        for box in spent:
            del self.boxes[box.id]
        for index, out in enumerate(tx.outputs):
            op = Outpoint(txid, index)
            self.boxes[op] = LockBox(op, Fraction(out.value), out.condition)
        self.log.append(LogEntry(self.height, tx))
        logger.debug("%s accepted %s at height %d", self.chain, txid[:16], self.height)
        return txid

    def read(self) -> Tuple[LogEntry, ...]:
        return tuple(self.log)

    def tick(self, delta: int = 1) -> int:
        if delta < 1:
            raise InvalidParameter(f"tick must advance by at least 1, got {delta}")
        self.height += delta
        return self.height

    def advance_to(self, height: int) -> int:
        if height > self.height:
            self.tick(height - self.height)
        return self.height

    def boxes_for(self, pk: GroupElement) -> List[LockBox]:
        return sorted(
            (b for b in self.boxes.values() if isinstance(b.condition, SingleKey) and b.condition.pk == pk),
            key=lambda b: b.id,
        )

    def balance(self, pk: GroupElement) -> Fraction:
        return sum((b.value for b in self.boxes_for(pk)), Fraction(0))

    def total_value(self) -> Fraction:
        return sum((b.value for b in self.boxes.values()), Fraction(0))

    def snapshot(self) -> LedgerView:
        return LedgerView(self.chain, self.height, tuple(self.log), MappingProxyType(dict(self.boxes)))


def genesis(allocations: Iterable[Tuple[GroupElement, Coins]], chain: str = "main") -> LedgerState:
    return LedgerState.genesis(allocations, chain)


def post(st: LedgerState, tx: LedgerTx) -> LedgerState:
    st.post(tx)
    return st


def read(st: LedgerState) -> Tuple[LogEntry, ...]:
    return st.read()


def tick(st: LedgerState, delta: int = 1) -> LedgerState:
    st.tick(delta)
    return st


def export_log(st: Union[LedgerState, LedgerView, Sequence[LogEntry]]) -> str:
    """One JSON object per accepted transaction, in log order."""
    entries = st if isinstance(st, (list, tuple)) else st.log
    lines = []
    for entry in entries:
        tx = entry.tx
        lines.append(json.dumps({
            "txid": tx.txid,
            "height": entry.height,
            "inputs": [str(i) for i in tx.inputs],
            "outputs": [{"value": str(Fraction(o.value)), "condition": o.condition.to_bytes().hex()}
                        for o in tx.outputs],
            "witnesses": [s.to_bytes().hex() for s in tx.witness],
        }, sort_keys=True))
    return "".join(line + "\n" for line in lines)


def parse_log(text: str) -> List[LogEntry]:
    """Inverse of export_log. Errors carry the 1-based line number."""
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            tx = LedgerTx(
                inputs=tuple(Outpoint.parse(i) for i in record["inputs"]),
                outputs=tuple(
                    TxOutput(_parse_value(o["value"]), decode_condition(bytes.fromhex(o["condition"])))
                    for o in record["outputs"]
                ),
                witness=tuple(Signature.from_bytes(bytes.fromhex(w)) for w in record["witnesses"]),
            )
            height = record["height"]
            if not isinstance(height, int) or height < 0:
                raise MalformedEncoding("height must be a non-negative integer")
            if tx.txid != record["txid"]:
                raise MalformedEncoding("txid does not match transaction contents")
        except MalformedEncoding as e:
            raise MalformedEncoding(str(e), line=lineno) from e
        except (ValueError, KeyError, TypeError, ProSwapError) as e:
            raise MalformedEncoding(f"unreadable record: {e}", line=lineno) from e
        entries.append(LogEntry(height, tx))
    return entries
