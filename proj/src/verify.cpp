#include "sufforge/verify.hpp"

#include "sufforge/error.hpp"
#include "sufforge/oracle.hpp"
#include "sufforge/pipeline.hpp"

#include <fstream>

namespace sufforge {

VerifyResult verify_against_oracle(std::span<const std::filesystem::path> inputs, const std::filesystem::path& dir,
                                   bool indexes_only) {
    const auto input = ingest_inputs(inputs);
    const auto expected = naive_sa(input.reads);
    const auto parts = part_files(dir);
    if (parts.empty())
        throw VerifyMismatch("no part files under " + dir.string());

    VerifyResult result;
    result.part_files = parts.size();
    std::size_t next = 0;
    std::string line;
    for (const auto& part : parts) {
        std::ifstream in(part, std::ios::binary);
        if (!in)
            throw VerifyMismatch("cannot open " + part.string());
        std::uint64_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string where = part.filename().string() + ":" + std::to_string(lineno);
            if (next >= expected.size())
                throw VerifyMismatch(where + ": unexpected extra line '" + line + "'");
            const auto& e = expected[next];
            std::string want = indexes_only ? std::to_string(e.index.packed)
                                            : e.suffix + '\t' + std::to_string(e.index.packed);
            if (line != want)
                throw VerifyMismatch(where + " (suffix #" + std::to_string(next) + "): expected '" + want +
                                     "', got '" + line + "'");
            ++next;
        }
    }
    if (next != expected.size())
        throw VerifyMismatch("output ends after " + std::to_string(next) + " lines; oracle has " +
                             std::to_string(expected.size()));
    result.lines = next;
    return result;
}

} // namespace sufforge
