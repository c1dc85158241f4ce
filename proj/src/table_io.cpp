#include "gisurv/table_io.hpp"

#include "gisurv/error.hpp"
#include "gisurv/text.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iterator>
#include <memory>

namespace gisurv {

std::vector<TableRow> parse_table(std::string_view content, char delim) {
    std::vector<TableRow> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        const std::size_t nl = content.find('\n', pos);
        const std::size_t end = nl == std::string_view::npos ? content.size() : nl;
        std::string_view line = content.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;

        const auto trimmed = text::trim(line);
        if (!trimmed.empty() && trimmed.front() != '#') {
            TableRow row{line_no, {}};
            if (delim == '\0') {
                row.fields.emplace_back(trimmed);
            } else {
                std::size_t b = 0;
                while (true) {
                    const std::size_t d = trimmed.find(delim, b);
                    row.fields.emplace_back(text::trim(trimmed.substr(b, d == std::string_view::npos ? d : d - b)));
                    if (d == std::string_view::npos) break;
                    b = d + 1;
                }
            }
            rows.push_back(std::move(row));
        }
        if (nl == std::string_view::npos) break;
    }
    return rows;
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
        throw Error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

}  // namespace gisurv
