#include "bsdr/io.hpp"

namespace bsdr::io {

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw IoError("cannot create output directory '" + root_.string() + "': " + ec.message());
    if (!std::filesystem::is_directory(root_)) throw IoError("'" + root_.string() + "' is not a directory");
}

std::filesystem::path OutputDir::file(const std::string& name) const {
    if (name.empty() || name == "." || name == ".." || name.find_first_of("/\\") != std::string::npos) {
        throw IoError("output name '" + name + "' must be a plain file name");
    }
    return root_ / name;
}

void OutputDir::write(const std::string& name, const std::string& content) const { write_file(file(name), content); }

}  // namespace bsdr::io
