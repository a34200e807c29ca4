#include "jailkit/trace.hpp"

#include "jailkit/error.hpp"

namespace jailkit {

TraceSink::TraceSink(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open trace file " + path.string());
}

void TraceSink::write(const nlohmann::ordered_json& record) {
    auto line = record.dump();
    std::lock_guard lock(mu_);
    if (out_.is_open()) {
        out_ << line << '\n';
        out_.flush();
    }
    lines_.push_back(std::move(line));
}

std::vector<std::string> TraceSink::lines() const {
    std::lock_guard lock(mu_);
    return lines_;
}

}  // namespace jailkit
