"""Tests for cut-and-choose issuance, signer state and the registration wire format"""

import dataclasses
import threading

import pytest

from bsid_cli.core.crypto_core import encode_message, make_randfunc, verify_signature
from bsid_cli.core.ephid_gen import derive_ephids, new_main_seed
from bsid_cli.core.errors import (
    AlreadyRegistered, AuditFailed, Blocked, IdentityRejected, MalformedRequest, MalformedReveal,
    SignerMisbehavior,
)
from bsid_cli.core.registration import (
    DEFAULT_BLOCKLIST_DAYS, Blocklist, IdentityVerifier, IssuedCredentials, RevealPackage, ServedLog,
    Signer, client_begin, client_reveal, client_unblind, decode_challenge, decode_request,
    decode_response, decode_reveal, encode_challenge, encode_error, encode_request, encode_response,
    encode_reveal,
)
from bsid_cli.core.signer_server import RemoteSigner, SignerServer

from tests.helpers import TEST_DAY, issue

DAY = 86400


def _begin(keys, identity, m=3, n=4, seed=0):
    main = new_main_seed(keys.day_index, make_randfunc(seed))
    return client_begin(main, m, n, keys.public(), identity)


def _tamper(request, set_index):
    rows = list(request.blinded)
    rows[set_index - 1] = tuple((v + 1) for v in rows[set_index - 1])
    return dataclasses.replace(request, blinded=tuple(rows))


class TestIssuance:
    def test_honest_client_gets_valid_credentials(self, signer, day_keys):
        issued = issue(signer, day_keys, 'alice', m=3, n=4, seed=1)
        assert issued.day_index == day_keys.day_index
        assert 1 <= issued.selected <= 3
        assert len(issued.credentials) == 4
        assert all(verify_signature(c.ephid, c.sd, day_keys.public()) for c in issued.credentials)

    def test_credentials_come_from_selected_set(self, signer, day_keys):
        issued = issue(signer, day_keys, 'alice', m=3, n=4, seed=1)
        derived = derive_ephids(issued.secondary_seed, issued.selected, 4).ephids
        assert tuple(c.ephid for c in issued.credentials) == derived

    def test_signer_keeps_transcript(self, signer, day_keys):
        issue(signer, day_keys, 'alice', seed=1)
        session = signer.transcripts[-1]
        assert session.identity == 'alice'
        assert len(session.signed) == 4
        assert sorted(session.reveal.revealed_set_indices) == session.challenge.demanded

    def test_single_registration_per_day(self, signer, day_keys):
        issue(signer, day_keys, 'alice', seed=1)
        with pytest.raises(AlreadyRegistered):
            issue(signer, day_keys, 'alice', seed=2)

    def test_served_marked_at_challenge(self, signer, day_keys):
        request, _ = _begin(day_keys, 'carol')
        signer.signer_receive(request, now=0)
        with pytest.raises(AlreadyRegistered):
            signer.signer_receive(request, now=0)

    def test_other_identities_unaffected(self, signer, day_keys):
        issue(signer, day_keys, 'alice', seed=1)
        assert issue(signer, day_keys, 'bob', seed=2).credentials

    def test_credentials_roundtrip_through_dict(self, issued):
        assert IssuedCredentials.from_dict(issued.to_dict()) == issued

    def test_unblind_rejects_bad_signature(self, signer, day_keys):
        request, state = _begin(day_keys, 'dave')
        session = signer.signer_receive(request, now=0)
        signed = signer.signer_audit_and_sign(session, client_reveal(state, session.challenge))
        signed[0] = (signed[0] * 2) % day_keys.n
        with pytest.raises(SignerMisbehavior):
            client_unblind(state, signed)

    def test_unblind_rejects_short_response(self, signer, day_keys):
        request, state = _begin(day_keys, 'erin')
        session = signer.signer_receive(request, now=0)
        signed = signer.signer_audit_and_sign(session, client_reveal(state, session.challenge))
        with pytest.raises(SignerMisbehavior):
            client_unblind(state, signed[:-1])

    def test_unknown_day_rejected(self, signer, next_day_keys):
        request, _ = _begin(next_day_keys, 'frank')
        with pytest.raises(MalformedRequest):
            signer.signer_receive(request, now=0)

    def test_out_of_range_blinded_value(self, signer, day_keys):
        request, _ = _begin(day_keys, 'gina')
        rows = list(request.blinded)
        rows[0] = (day_keys.n,) + rows[0][1:]
        with pytest.raises(MalformedRequest):
            signer.signer_receive(dataclasses.replace(request, blinded=tuple(rows)), now=0)

    def test_rejected_identity(self, day_keys):
        signer = Signer([day_keys], rng_seed=1, verifier=IdentityVerifier(rejected=['mallory']))
        request, _ = _begin(day_keys, 'mallory')
        with pytest.raises(IdentityRejected):
            signer.signer_receive(request, now=0)


class TestAudit:
    def test_tampered_set_detected_and_blocked(self, day_keys, next_day_keys):
        signer = Signer([day_keys, next_day_keys], rng_seed=5)
        request, state = _begin(day_keys, 'mallory', m=4)
        session = signer.signer_receive(request, now=1000)
        demanded = session.challenge.demanded[0]
        session = dataclasses.replace(session, request=_tamper(request, demanded))
        with pytest.raises(AuditFailed):
            signer.signer_audit_and_sign(session, client_reveal(state, session.challenge))
        assert signer.blocklist.is_blocked('mallory', 1000)

        other_request, _ = _begin(next_day_keys, 'mallory', seed=9)
        with pytest.raises(Blocked):
            signer.signer_receive(other_request, now=1000 + DAY)

    def test_tampered_selected_set_goes_undetected(self, signer, day_keys):
        request, state = _begin(day_keys, 'mallory', m=4)
        session = signer.signer_receive(request, now=0)
        session = dataclasses.replace(session, request=_tamper(request, session.challenge.selected))
        signed = signer.signer_audit_and_sign(session, client_reveal(state, session.challenge))
        assert len(signed) == 4

    def test_reveal_must_cover_demanded_sets(self, signer, day_keys):
        request, state = _begin(day_keys, 'hank', m=3)
        session = signer.signer_receive(request, now=0)
        reveal = client_reveal(state, session.challenge)
        with pytest.raises(MalformedReveal):
            signer.signer_audit_and_sign(session, RevealPackage(sets=reveal.sets[:1]))

    def test_session_completes_once(self, signer, day_keys):
        request, state = _begin(day_keys, 'ivy')
        session = signer.signer_receive(request, now=0)
        reveal = client_reveal(state, session.challenge)
        signer.signer_audit_and_sign(session, reveal)
        with pytest.raises(MalformedReveal):
            signer.signer_audit_and_sign(session, reveal)

    def test_failed_audit_closes_session(self, day_keys):
        signer = Signer([day_keys], rng_seed=5)
        request, state = _begin(day_keys, 'judy', m=4)
        session = signer.signer_receive(request, now=0)
        reveal = client_reveal(state, session.challenge)
        tampered = dataclasses.replace(session, request=_tamper(request, session.challenge.demanded[0]))
        with pytest.raises(AuditFailed):
            signer.signer_audit_and_sign(tampered, reveal)
        tampered.request = request
        with pytest.raises(MalformedReveal):
            signer.signer_audit_and_sign(tampered, reveal)
        assert signer.transcripts == []

    def test_malformed_reveal_closes_session(self, signer, day_keys):
        request, state = _begin(day_keys, 'kim', m=3)
        session = signer.signer_receive(request, now=0)
        reveal = client_reveal(state, session.challenge)
        with pytest.raises(MalformedReveal):
            signer.signer_audit_and_sign(session, RevealPackage(sets=reveal.sets[:1]))
        with pytest.raises(MalformedReveal):
            signer.signer_audit_and_sign(session, reveal)

    def test_concurrent_audits_sign_once(self, signer, day_keys):
        request, state = _begin(day_keys, 'lee', m=3)
        session = signer.signer_receive(request, now=0)
        reveal = client_reveal(state, session.challenge)
        outcomes = []

        def audit():
            try:
                outcomes.append(len(signer.signer_audit_and_sign(session, reveal)))
            except MalformedReveal:
                outcomes.append('closed')

        threads = [threading.Thread(target=audit) for _ in range(8)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        assert sorted(outcomes, key=str) == [4] + ['closed'] * 7
        assert len(signer.transcripts) == 1

    @pytest.mark.slow
    def test_detection_rate_matches_set_count(self, day_keys):
        """One tampered set out of M = 10 is caught with probability 9/10"""
        m, trials = 10, 2000
        signer = Signer([day_keys], rng_seed=2024)
        placement = make_randfunc(99)
        detected = 0
        for trial in range(trials):
            request, state = _begin(day_keys, f'user-{trial}', m=m, n=1, seed=trial)
            tampered = placement(1)[0] % m + 1
            session = signer.signer_receive(request, now=0)
            session = dataclasses.replace(session, request=_tamper(request, tampered))
            try:
                signer.signer_audit_and_sign(session, client_reveal(state, session.challenge))
            except AuditFailed:
                detected += 1
        assert 0.87 <= detected / trials <= 0.93


class TestSignerState:
    def test_blocklist_persists_and_expires(self, tmp_path):
        path = tmp_path / 'blocklist.tsv'
        Blocklist(path).add('mallory', now=100)
        reloaded = Blocklist(path)
        assert reloaded.is_blocked('mallory', 100 + DAY)
        assert not reloaded.is_blocked('mallory', 100 + DEFAULT_BLOCKLIST_DAYS * DAY)
        assert not reloaded.is_blocked('alice', 100)

    def test_served_log_persists_and_prunes(self, tmp_path):
        path = tmp_path / 'served.log'
        log = ServedLog(path)
        log.mark('alice', 10)
        log.mark('bob', 11)
        assert ServedLog(path).has('alice', 10)
        assert log.prune(11) == 1
        reloaded = ServedLog(path)
        assert not reloaded.has('alice', 10)
        assert reloaded.has('bob', 11)

    def test_rollover_allows_new_day(self, day_keys):
        signer = Signer([day_keys])
        signer.served.mark('alice', TEST_DAY - 1)
        assert signer.rollover(TEST_DAY) == 1

    def test_signer_requires_private_keys(self, day_keys):
        with pytest.raises(ValueError):
            Signer([day_keys.public()])


def _leaves(value):
    if dataclasses.is_dataclass(value):
        for item in dataclasses.fields(value):
            yield from _leaves(getattr(value, item.name))
    elif isinstance(value, (list, tuple, set, frozenset)):
        for item in value:
            yield from _leaves(item)
    elif isinstance(value, dict):
        for key, item in value.items():
            yield from _leaves(key)
            yield from _leaves(item)
    else:
        yield value


class TestSignerKnowledge:
    """The signer keeps nothing that names the signed, unrevealed set"""

    def test_selected_ephids_absent_from_signer_state(self, day_keys, tmp_path):
        signer = Signer([day_keys], rng_seed=13, blocklist=Blocklist(tmp_path / 'blocklist.tsv'),
                        served=ServedLog(tmp_path / 'served.log'))
        issued = issue(signer, day_keys, 'alice', m=5, n=6, seed=17)
        public = day_keys.public()
        ephids = {c.ephid for c in issued.credentials}
        numbers = {encode_message(c.ephid, public) for c in issued.credentials}
        numbers |= {c.sd for c in issued.credentials}

        leaves = list(_leaves(signer.transcripts)) + list(_leaves(signer.served._served))
        leaves += [path.read_bytes() for path in tmp_path.iterdir()]
        blobs = [leaf for leaf in leaves if isinstance(leaf, (bytes, str))]
        for ephid in ephids:
            for blob in blobs:
                assert (ephid not in blob) if isinstance(blob, bytes) else (ephid.hex() not in blob)
        assert numbers.isdisjoint(leaf for leaf in leaves if isinstance(leaf, int))
        assert issued.secondary_seed not in blobs

        session = signer.transcripts[0]
        assert issued.selected not in session.reveal.revealed_set_indices
        for revealed in session.reveal.sets:
            assert ephids.isdisjoint(derive_ephids(revealed.secondary_seed, revealed.set_index, 6).ephids)


class TestWireFormat:
    def test_request_roundtrip(self, day_keys):
        request, _ = _begin(day_keys, 'alice')
        data = encode_request(request, day_keys.width)
        assert decode_request(data, lambda day: day_keys.width) == request

    def test_request_length_checked(self, day_keys):
        request, _ = _begin(day_keys, 'alice')
        data = encode_request(request, day_keys.width)
        with pytest.raises(MalformedRequest):
            decode_request(data[:-1], lambda day: day_keys.width)

    def test_challenge_and_reveal_roundtrip(self, signer, day_keys):
        request, state = _begin(day_keys, 'alice')
        session = signer.signer_receive(request, now=0)
        assert decode_challenge(encode_challenge(session.challenge), 3) == session.challenge
        reveal = client_reveal(state, session.challenge)
        assert decode_reveal(encode_reveal(reveal)) == reveal

    def test_response_roundtrip(self, day_keys):
        values = [1, 2, day_keys.n - 1]
        assert decode_response(encode_response(values, day_keys), 3, day_keys.width) == values

    def test_error_frame_raises_matching_kind(self):
        with pytest.raises(Blocked):
            decode_challenge(encode_error(Blocked()), 3)


@pytest.mark.integration
class TestSignerServer:
    @pytest.fixture
    def server(self, day_keys):
        server = SignerServer(('127.0.0.1', 0), Signer([day_keys], rng_seed=8))
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        yield server
        server.shutdown()
        server.server_close()

    def test_remote_issuance(self, server, day_keys):
        remote = RemoteSigner(*server.server_address[:2], keys=day_keys)
        issued = issue(remote, day_keys, 'alice', m=3, n=4, seed=1)
        assert all(verify_signature(c.ephid, c.sd, day_keys.public()) for c in issued.credentials)

    def test_remote_error_propagates(self, server, day_keys):
        remote = RemoteSigner(*server.server_address[:2], keys=day_keys)
        issue(remote, day_keys, 'alice', seed=1)
        with pytest.raises(AlreadyRegistered):
            issue(remote, day_keys, 'alice', seed=2)
