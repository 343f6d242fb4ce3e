#include "abaudit/matcher/event_log.hpp"

#include <iterator>

#include "abaudit/core/errors.hpp"

namespace abaudit::matcher {

namespace {
constexpr std::uint32_t kMaxRecord = 16u << 20;
}

void EventLog::append(const EventTag& tag, ByteView payload) {
    Bytes rec;
    put_u32(rec, static_cast<std::uint32_t>(tag.size() + payload.size()));
    rec.insert(rec.end(), tag.begin(), tag.end());
    put_bytes(rec, payload);
    std::lock_guard lock(mutex_);
    data_.insert(data_.end(), rec.begin(), rec.end());
    ++count_;
    if (file_.is_open()) {
        file_.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
        file_.flush();
        if (!file_) throw Error("event log write failed");
    }
}

Bytes EventLog::bytes() const {
    std::lock_guard lock(mutex_);
    return data_;
}

std::size_t EventLog::count() const {
    std::lock_guard lock(mutex_);
    return count_;
}

void EventLog::attach_file(const std::filesystem::path& path) {
    std::lock_guard lock(mutex_);
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw Error("cannot open event log " + path.string());
    file_.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size()));
    file_.flush();
}

std::vector<EventRecord> EventLog::parse(ByteView bytes) {
    std::vector<EventRecord> out;
    ByteReader in(bytes);
    while (!in.done()) {
        auto body = in.var(kMaxRecord);
        if (body.size() < 4) throw DecodeError("event record shorter than its tag");
        EventRecord r;
        std::copy_n(body.begin(), 4, r.tag.begin());
        r.payload.assign(body.begin() + 4, body.end());
        out.push_back(std::move(r));
    }
    return out;
}

Bytes EventLog::read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw NotFoundError("cannot open event log " + path.string());
    return Bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace abaudit::matcher
