"""Tests for positive reports, exposure matching and FinalTrial posts"""

from dataclasses import replace

import pytest

from bsid_cli.core.beacon_codec import Beacon
from bsid_cli.core.crypto_core import auth_tag, generate_day_keys, make_randfunc, sign_blinded
from bsid_cli.core.errors import InvalidArgument, NoCodeAvailable, SignerMisbehavior, StoreFormatError
from bsid_cli.core.exposure import (
    BulletinBoard, FinalTrialCodeSet, ReportedDay, TallyStatus, check_exposure, finaltrial_generate,
    finaltrial_post_match, finaltrial_tally, infectious_window, publish_positive, verify_match_post,
)
from bsid_cli.core.receiver_store import ReceiverStore

from tests.helpers import TEST_DAY


@pytest.fixture
def contact_store(chain, issued):
    """Receiver that heard all four of alice's EphIDs plus one stranger"""
    anchor = chain.chain_anchor()
    store = ReceiverStore([anchor])
    for index, credential in enumerate(issued.credentials, start=1):
        beacon = Beacon(ephid=credential.ephid, auth=auth_tag(chain.key(index), credential.ephid))
        store.on_beacon(beacon, anchor.interval_start(index) + 30)
    stranger = bytes(range(13))
    store.on_beacon(Beacon(ephid=stranger, auth=auth_tag(chain.key(5), stranger)), anchor.interval_start(5) + 30)
    for index in range(1, 6):
        store.on_key_release(chain.key(index), index, TEST_DAY)
    assert store.verified_count == 5
    return store


def alice_report(issued) -> ReportedDay:
    return ReportedDay(TEST_DAY, issued.secondary_seed, issued.selected, n=len(issued.credentials))


@pytest.fixture
def codes(finaltrial_keys):
    return finaltrial_generate(8, finaltrial_keys, randfunc=make_randfunc(5))


class TestPositiveReports:
    def test_planted_contacts_found(self, contact_store, issued):
        board = BulletinBoard()
        case = publish_positive([alice_report(issued)], board, TEST_DAY + 1)
        (match,) = check_exposure(contact_store, board)
        assert match.case_number == case == 1
        assert match.publication_day == TEST_DAY + 1
        assert match.day_index == TEST_DAY
        assert set(match.ephids) == {c.ephid for c in issued.credentials}

    def test_unrelated_report_has_no_match(self, contact_store, issued):
        board = BulletinBoard()
        publish_positive([ReportedDay(TEST_DAY, bytes(32), issued.selected, 4)], board, TEST_DAY)
        assert check_exposure(contact_store, board) == []

    def test_report_for_other_day_ignored(self, contact_store, issued):
        board = BulletinBoard()
        publish_positive([replace(alice_report(issued), day_index=TEST_DAY - 1)], board, TEST_DAY)
        assert check_exposure(contact_store, board) == []

    def test_case_numbers_per_publication_day(self, issued):
        board = BulletinBoard()
        assert publish_positive([alice_report(issued)], board, TEST_DAY) == 1
        assert publish_positive([alice_report(issued)], board, TEST_DAY) == 2
        assert publish_positive([alice_report(issued)], board, TEST_DAY + 1) == 1

    def test_empty_or_invalid_report(self, issued):
        board = BulletinBoard()
        with pytest.raises(InvalidArgument):
            publish_positive([], board, TEST_DAY)
        with pytest.raises(InvalidArgument):
            publish_positive([replace(alice_report(issued), secondary_seed=b"short")], board, TEST_DAY)
        assert len(board) == 0

    def test_infectious_window(self):
        assert list(infectious_window(100, 103)) == [98, 99, 100, 101, 102, 103]
        with pytest.raises(InvalidArgument):
            infectious_window(100, 99)

    def test_board_journal_replay(self, issued, codes, tmp_path):
        path = tmp_path / 'board.journal'
        board = BulletinBoard(path)
        publish_positive([alice_report(issued)], board, TEST_DAY)
        finaltrial_post_match(codes, 1, board, TEST_DAY)
        reopened = BulletinBoard(path)
        assert reopened.entries() == board.entries()
        assert reopened.reports()[0].days[0] == alice_report(issued)

    def test_corrupt_journal(self, tmp_path):
        path = tmp_path / 'board.journal'
        path.write_bytes(b"\x09\x00\x00\x00\x00")
        with pytest.raises(StoreFormatError):
            BulletinBoard(path)
        path.write_bytes(b"\x01\x00\x00\x00\x10abc")
        with pytest.raises(StoreFormatError):
            BulletinBoard(path)


class TestFinalTrial:
    def test_post_verifies(self, codes, finaltrial_keys):
        board = BulletinBoard()
        post = finaltrial_post_match(codes, 3, board, TEST_DAY)
        assert verify_match_post(post, finaltrial_keys.public())
        assert board.match_posts(TEST_DAY, 3) == [post]

    def test_tampered_post_fails(self, codes, finaltrial_keys):
        post = finaltrial_post_match(codes, 3, BulletinBoard(), TEST_DAY)
        public = finaltrial_keys.public()
        assert not verify_match_post(replace(post, nonce=bytes(16)), public)
        assert not verify_match_post(replace(post, case_number=4), public)
        assert not verify_match_post(replace(post, sp=bytes(len(post.sp))), public)

    def test_wrong_key_fails(self, codes, day_keys):
        post = finaltrial_post_match(codes, 1, BulletinBoard(), TEST_DAY)
        assert not verify_match_post(post, day_keys.public())

    @pytest.mark.parametrize('case', [0, 9])
    def test_no_code_for_case(self, codes, case):
        with pytest.raises(NoCodeAvailable):
            finaltrial_post_match(codes, case, BulletinBoard(), TEST_DAY)

    def test_blind_signing_through_callable(self, finaltrial_keys):
        codes = finaltrial_generate(4, finaltrial_keys.public(),
                                    sign=lambda blinded: sign_blinded(blinded, finaltrial_keys),
                                    randfunc=make_randfunc(6))
        post = finaltrial_post_match(codes, 2, BulletinBoard(), TEST_DAY)
        assert verify_match_post(post, finaltrial_keys.public())

    def test_bad_signature_detected(self, finaltrial_keys):
        with pytest.raises(SignerMisbehavior):
            finaltrial_generate(4, finaltrial_keys.public(), sign=lambda blinded: blinded,
                                randfunc=make_randfunc(7))

    def test_public_key_without_signer(self, finaltrial_keys):
        with pytest.raises(InvalidArgument):
            finaltrial_generate(4, finaltrial_keys.public())

    def test_modulus_must_exceed_root_width(self):
        small = generate_day_keys(TEST_DAY, 256, make_randfunc(9))
        with pytest.raises(InvalidArgument):
            finaltrial_generate(4, small)

    def test_codes_document(self, codes, finaltrial_keys):
        restored = FinalTrialCodeSet.from_dict(codes.to_dict())
        assert restored.root == codes.root
        assert restored.sp == codes.sp
        assert not restored.keys.is_private
        post = finaltrial_post_match(restored, 5, BulletinBoard(), TEST_DAY)
        assert verify_match_post(post, finaltrial_keys.public())
        with pytest.raises(InvalidArgument):
            FinalTrialCodeSet.from_dict({'day_index': TEST_DAY})


class TestTally:
    def test_counts_distinct_valid_posts(self, codes, finaltrial_keys):
        board = BulletinBoard()
        other = finaltrial_generate(8, finaltrial_keys, randfunc=make_randfunc(10))
        finaltrial_post_match(codes, 1, board, TEST_DAY)
        finaltrial_post_match(codes, 1, board, TEST_DAY)
        finaltrial_post_match(other, 1, board, TEST_DAY)
        finaltrial_post_match(other, 2, board, TEST_DAY)
        assert len(board) == 3

        keys_map = {TEST_DAY: finaltrial_keys.public()}
        result = finaltrial_tally(board, TEST_DAY, 1, keys_map)
        assert result.count == 2
        assert result.invalid == 0
        assert result.status is TallyStatus.NORMAL
        assert finaltrial_tally(board, TEST_DAY, 1, keys_map, threshold=1).status is TallyStatus.SUSPICIOUS
        assert finaltrial_tally(board, TEST_DAY, 1, keys_map, threshold=2).status is TallyStatus.NORMAL

    @pytest.mark.parametrize('posts, status', [(100, TallyStatus.NORMAL), (101, TallyStatus.SUSPICIOUS)])
    def test_default_scale_threshold_boundary(self, finaltrial_keys, posts, status):
        board = BulletinBoard()
        for device in range(posts):
            device_codes = finaltrial_generate(2, finaltrial_keys, randfunc=make_randfunc(1000 + device))
            finaltrial_post_match(device_codes, 1, board, TEST_DAY)
        result = finaltrial_tally(board, TEST_DAY, 1, {TEST_DAY: finaltrial_keys.public()}, threshold=100)
        assert result.count == posts
        assert result.status is status

    def test_unverifiable_posts_not_counted(self, codes):
        board = BulletinBoard()
        finaltrial_post_match(codes, 1, board, TEST_DAY)
        result = finaltrial_tally(board, TEST_DAY, 1, {}, threshold=0)
        assert (result.count, result.invalid) == (0, 1)
        assert result.status is TallyStatus.NORMAL

    def test_other_day_posts_ignored(self, codes, finaltrial_keys):
        board = BulletinBoard()
        finaltrial_post_match(codes, 1, board, TEST_DAY + 1)
        result = finaltrial_tally(board, TEST_DAY, 1, {TEST_DAY: finaltrial_keys.public()}, threshold=0)
        assert result.count == 0
