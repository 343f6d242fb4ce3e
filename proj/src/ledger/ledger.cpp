#include "abaudit/ledger/ledger.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <mutex>
#include <set>

#include "abaudit/core/errors.hpp"

namespace abaudit::ledger {

using crypto::Digest;
using crypto::GroupParams;
using protocol::Direction;
using protocol::PostedMessage;

namespace {

constexpr std::string_view kMagic = "ABL1";
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::array<std::uint8_t, crypto::Signature::kSize> kNoSignature{};

void encode_record(Bytes& out, const GroupParams& params, const LedgerRecord& r) {
    protocol::encode(out, r.key);
    for (const auto& side : r.sides) {
        put_bytes(out, side.amount_commitment.to_bytes(params));
        put_bytes(out, side.detail_commitment.to_bytes(params));
        put_bytes(out, side.signature.bytes());
        put_bytes(out, side.signer_key.bytes());
    }
    put_u64(out, static_cast<std::uint64_t>(r.verified_at));
    put_u8(out, static_cast<std::uint8_t>(r.annotation));
}

LedgerRecord decode_record(ByteReader& in, const GroupParams& params) {
    LedgerRecord r;
    r.key = protocol::decode_pair_key(in);
    for (auto& side : r.sides) {
        side.amount_commitment = crypto::Commitment::from_bytes(params, in.take(params.element_bytes()));
        side.detail_commitment = crypto::Commitment::from_bytes(params, in.take(params.element_bytes()));
        side.signature = crypto::Signature::decode(in.take(crypto::Signature::kSize));
        side.signer_key = crypto::PublicKey::from_bytes(in.take(crypto::PublicKey::kSize));
    }
    r.verified_at = static_cast<Timestamp>(in.u64());
    auto a = in.u8();
    if (a > 1) throw DecodeError("unknown record annotation");
    r.annotation = static_cast<Annotation>(a);
    return r;
}

void encode_block(Bytes& out, const GroupParams& params, const Block& b) {
    Bytes body;
    put_u64(body, b.height);
    put_bytes(body, b.previous_hash);
    put_u64(body, static_cast<std::uint64_t>(b.timestamp));
    put_bytes(body, encode_records(params, b.records));
    put_bytes(body, b.proposer_signature);
    put_bytes(body, b.block_hash);
    put_var(out, body);
}

Block decode_block(ByteView body, const GroupParams& params) {
    ByteReader in(body);
    Block b;
    b.height = in.u64();
    b.previous_hash = in.take_array<32>();
    b.timestamp = static_cast<Timestamp>(in.u64());
    auto n = in.u32();
    // Every record is far larger than one byte, so this bounds allocation.
    if (n > in.remaining()) throw DecodeError("record count exceeds block size");
    for (std::uint32_t i = 0; i < n; ++i) b.records.push_back(decode_record(in, params));
    b.proposer_signature = in.take_array<crypto::Signature::kSize>();
    b.block_hash = in.take_array<32>();
    in.expect_done();
    return b;
}

Bytes encode_header(const GroupParams& params, const crypto::PublicKey& op, const std::string& label) {
    Bytes h;
    put_bytes(h, params.id());
    put_bytes(h, op.bytes());
    put_var(h, label);
    return h;
}

Block make_genesis(ByteView header) {
    Block g;
    g.height = 0;
    g.timestamp = 0;
    g.block_hash = compute_block_hash(0, g.previous_hash, header, 0);
    return g;
}

ChainCheck bad(std::uint64_t height, std::string reason) { return ChainCheck{false, height, std::move(reason)}; }

// Walks heights in order and reports the first inconsistency.
template <typename Blocks>
ChainCheck verify_blocks(const GroupParams& params, const crypto::PublicKey& op, ByteView header,
                         const Blocks& blocks) {
    if (blocks.empty()) return bad(0, "missing genesis block");
    Digest expected_prev{};
    std::set<protocol::PairKey> seen;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const Block& b = blocks[i];
        const auto h = static_cast<std::uint64_t>(i);
        if (b.height != h) return bad(h, "height field out of sequence");
        if (b.previous_hash != expected_prev) return bad(h, "previous hash does not link to the prior block");
        if (h == 0) {
            if (!b.records.empty() || b.proposer_signature != kNoSignature || b.timestamp != 0) {
                return bad(0, "genesis block carries content");
            }
            if (compute_block_hash(0, b.previous_hash, header, 0) != b.block_hash) {
                return bad(0, "genesis hash does not match the chain header");
            }
        } else {
            if (b.records.empty()) return bad(h, "empty block");
            Bytes record_bytes = encode_records(params, b.records);
            if (compute_block_hash(h, b.previous_hash, record_bytes, b.timestamp) != b.block_hash) {
                return bad(h, "block hash mismatch");
            }
            bool proposer_ok = false;
            try {
                proposer_ok = crypto::verify_sig(op, record_bytes, ByteView(b.proposer_signature));
            } catch (const DecodeError&) {
                proposer_ok = false;
            }
            if (!proposer_ok) return bad(h, "proposer signature invalid");
            for (const auto& r : b.records) {
                if (!verify_record(params, r)) return bad(h, "record signature invalid");
                if (!seen.insert(r.key).second) return bad(h, "pair key ledgered twice");
            }
        }
        expected_prev = b.block_hash;
    }
    return {};
}

}  // namespace

std::string_view to_string(Annotation a) { return a == Annotation::clean ? "clean" : "risk-resolved"; }

PostedMessage LedgerRecord::message(Direction flag) const {
    const auto& side = sides[static_cast<std::size_t>(flag)];
    PostedMessage m;
    m.sender = key.sender;
    m.receiver = key.receiver;
    m.date = key.date;
    m.amount_commitment = side.amount_commitment;
    m.detail_commitment = side.detail_commitment;
    m.flag = flag;
    m.signature = side.signature;
    m.signer = crypto::derive_address(side.signer_key);
    return m;
}

LedgerRecord make_record(const PostedMessage& flag0, const crypto::PublicKey& key0, const PostedMessage& flag1,
                         const crypto::PublicKey& key1, Timestamp verified_at, Annotation annotation) {
    if (flag0.key() != flag1.key()) throw ParameterError("messages belong to different pairs");
    if (flag0.flag != Direction::outgoing || flag1.flag != Direction::incoming) {
        throw ParameterError("record needs one message per flag");
    }
    LedgerRecord r;
    r.key = flag0.key();
    r.sides[0] = {flag0.amount_commitment, flag0.detail_commitment, flag0.signature, key0};
    r.sides[1] = {flag1.amount_commitment, flag1.detail_commitment, flag1.signature, key1};
    r.verified_at = verified_at;
    r.annotation = annotation;
    return r;
}

bool verify_record(const GroupParams& params, const LedgerRecord& record) {
    for (auto flag : {Direction::outgoing, Direction::incoming}) {
        auto m = record.message(flag);
        if (m.signer != m.expected_signer()) return false;
        const auto& key = record.sides[static_cast<std::size_t>(flag)].signer_key;
        if (!protocol::verify_message_signature(params, m, key)) return false;
    }
    return true;
}

Bytes encode_records(const GroupParams& params, const std::vector<LedgerRecord>& records) {
    Bytes out;
    put_u32(out, static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) encode_record(out, params, r);
    return out;
}

Digest compute_block_hash(std::uint64_t height, const Digest& previous_hash, ByteView record_bytes,
                          Timestamp timestamp) {
    Bytes prefix;
    put_u64(prefix, height);
    put_bytes(prefix, previous_hash);
    Bytes suffix;
    put_u64(suffix, static_cast<std::uint64_t>(timestamp));
    crypto::Sha256 h;
    h.update(prefix).update(record_bytes).update(suffix);
    return h.finish();
}

Bytes TipAttestation::signed_bytes() const {
    Bytes out;
    put_string(out, "abaudit/tip/v1");
    put_u64(out, height);
    put_bytes(out, block_hash);
    return out;
}

Ledger::Ledger(const GroupParams& params, crypto::PublicKey operator_key, Clock clock, std::string chain_label)
    : Ledger(params, std::move(operator_key), std::move(clock), std::move(chain_label), true) {}

Ledger::Ledger(const GroupParams& params, crypto::PublicKey operator_key, Clock clock, std::string chain_label,
               bool with_genesis)
    : params_(&params),
      operator_key_(std::move(operator_key)),
      clock_(std::move(clock)),
      chain_label_(std::move(chain_label)),
      mutex_(std::make_unique<std::shared_mutex>()) {
    if (with_genesis) blocks_.push_back(make_genesis(header_bytes()));
}

Ledger::Ledger(Ledger&&) noexcept = default;
Ledger& Ledger::operator=(Ledger&&) noexcept = default;
Ledger::~Ledger() = default;

Bytes Ledger::header_bytes() const { return encode_header(*params_, operator_key_, chain_label_); }

Block Ledger::append_block(std::vector<LedgerRecord> records, const crypto::Signature& proposer_signature) {
    std::unique_lock lock(*mutex_);
    if (records.empty()) throw ValidationError("block must carry at least one record");
    std::set<protocol::PairKey> batch_keys;
    for (const auto& r : records) {
        if (!verify_record(*params_, r)) {
            throw ValidationError("record for " + r.key.str() + " has an invalid signature");
        }
        if (index_.count(r.key) || !batch_keys.insert(r.key).second) {
            throw ConflictError("pair " + r.key.str() + " is already ledgered");
        }
    }
    Bytes record_bytes = encode_records(*params_, records);
    if (!crypto::verify_sig(operator_key_, record_bytes, proposer_signature)) {
        throw AuthorizationError("proposer signature does not verify under the operator key");
    }

    Block b;
    b.height = blocks_.back().height + 1;
    b.previous_hash = blocks_.back().block_hash;
    b.records = std::move(records);
    b.timestamp = clock_();
    b.proposer_signature = proposer_signature.bytes();
    b.block_hash = compute_block_hash(b.height, b.previous_hash, record_bytes, b.timestamp);
    for (std::size_t i = 0; i < b.records.size(); ++i) index_[b.records[i].key] = {b.height, i};
    blocks_.push_back(b);
    return b;
}

std::uint64_t Ledger::height() const {
    std::shared_lock lock(*mutex_);
    return blocks_.back().height;
}

Block Ledger::block(std::uint64_t height) const {
    std::shared_lock lock(*mutex_);
    if (height >= blocks_.size()) throw NotFoundError("no block at height " + std::to_string(height));
    return blocks_[height];
}

Digest Ledger::tip_hash() const {
    std::shared_lock lock(*mutex_);
    return blocks_.back().block_hash;
}

std::size_t Ledger::record_count() const {
    std::shared_lock lock(*mutex_);
    return index_.size();
}

std::optional<RecordLocation> Ledger::get_record(const protocol::PairKey& key) const {
    std::shared_lock lock(*mutex_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    auto [height, index] = it->second;
    return RecordLocation{blocks_[height].records[index], height, index};
}

ChainCheck Ledger::verify_locked() const {
    return verify_blocks(*params_, operator_key_, header_bytes(), blocks_);
}

ChainCheck Ledger::verify_chain() const {
    std::shared_lock lock(*mutex_);
    return verify_locked();
}

ChainCheck Ledger::verify_chain(const TipAttestation& att) const {
    std::shared_lock lock(*mutex_);
    auto check = verify_locked();
    if (!check.ok) return check;
    if (!crypto::verify_sig(operator_key_, att.signed_bytes(), att.signature)) {
        return ChainCheck{false, std::nullopt, "tip attestation signature invalid"};
    }
    const auto tip = blocks_.back().height;
    if (att.height > tip) return bad(tip + 1, "chain is shorter than the attested tip");
    if (blocks_[att.height].block_hash != att.block_hash) return bad(att.height, "attested block hash differs");
    return check;
}

TipAttestation Ledger::attest_tip(const crypto::KeyPair& operator_key) const {
    std::shared_lock lock(*mutex_);
    if (operator_key.public_key() != operator_key_) throw AuthorizationError("not the operator key");
    TipAttestation att;
    att.height = blocks_.back().height;
    att.block_hash = blocks_.back().block_hash;
    att.signature = crypto::sign(operator_key, att.signed_bytes());
    return att;
}

Bytes Ledger::serialize() const {
    std::shared_lock lock(*mutex_);
    Bytes out;
    put_string(out, kMagic);
    put_u32(out, kFormatVersion);
    put_var(out, header_bytes());
    for (const auto& b : blocks_) encode_block(out, *params_, b);
    return out;
}

namespace {

struct Parsed {
    std::optional<crypto::PublicKey> op;
    std::string label;
    Bytes header;
    std::deque<Block> blocks;
    std::optional<std::uint64_t> parse_failure;  // height that failed to parse
    std::string failure;
};

Parsed parse_ledger(const GroupParams& params, ByteView bytes) {
    Parsed p;
    ByteReader in(bytes);
    try {
        auto magic = in.take(kMagic.size());
        if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw DecodeError("not a ledger file");
        if (in.u32() != kFormatVersion) throw DecodeError("unsupported ledger version");
        auto header = in.var(4096);
        p.header.assign(header.begin(), header.end());
        ByteReader h(header);
        if (h.take_array<8>() != params.id()) throw DecodeError("ledger uses different group parameters");
        p.op = crypto::PublicKey::from_bytes(h.take(crypto::PublicKey::kSize));
        p.label = h.var_string(1024);
        h.expect_done();
    } catch (const Error& e) {
        p.parse_failure = 0;
        p.failure = e.what();
        return p;
    }
    while (!in.done()) {
        const auto height = static_cast<std::uint64_t>(p.blocks.size());
        try {
            p.blocks.push_back(decode_block(in.var(), params));
        } catch (const Error& e) {
            p.parse_failure = height;
            p.failure = e.what();
            break;
        }
    }
    return p;
}

}  // namespace

ChainCheck Ledger::verify_bytes(const GroupParams& params, ByteView bytes) {
    auto p = parse_ledger(params, bytes);
    if (!p.op) return bad(0, p.failure);
    auto check = verify_blocks(params, *p.op, p.header, p.blocks);
    if (p.parse_failure && (check.ok || *p.parse_failure < *check.first_bad_height)) {
        return bad(*p.parse_failure, "unparseable block: " + p.failure);
    }
    if (p.blocks.empty() && !p.parse_failure) return bad(0, "missing genesis block");
    return check;
}

Ledger Ledger::deserialize(const GroupParams& params, ByteView bytes, Clock clock) {
    auto p = parse_ledger(params, bytes);
    if (!p.op) throw DecodeError("ledger header: " + p.failure);
    if (p.parse_failure) throw DecodeError("block " + std::to_string(*p.parse_failure) + ": " + p.failure);
    auto check = verify_blocks(params, *p.op, p.header, p.blocks);
    if (!check.ok) {
        throw DecodeError("ledger fails verification at height " + std::to_string(*check.first_bad_height) +
                          ": " + check.reason);
    }
    Ledger l(params, *p.op, std::move(clock), p.label, false);
    l.blocks_ = std::move(p.blocks);
    for (const auto& b : l.blocks_) {
        for (std::size_t i = 0; i < b.records.size(); ++i) l.index_[b.records[i].key] = {b.height, i};
    }
    return l;
}

void Ledger::save(const std::filesystem::path& path) const {
    auto bytes = serialize();
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw Error("cannot write ledger file " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Ledger Ledger::load(const GroupParams& params, const std::filesystem::path& path, Clock clock) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw NotFoundError("cannot open ledger file " + path.string());
    Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(params, data, std::move(clock));
}

}  // namespace abaudit::ledger
