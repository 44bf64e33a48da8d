#include "fixtures.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace kftest {

std::string data_dir() { return KERNFORGE_TEST_DATA; }

std::vector<std::pair<std::string, std::string>> load_dir(const std::string& sub) {
    namespace fs = std::filesystem;
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& entry : fs::directory_iterator(fs::path(data_dir()) / sub)) {
        if (entry.path().extension() != ".krn") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        files.emplace_back(entry.path().filename().string(),
                           std::string(std::istreambuf_iterator<char>(in), {}));
    }
    std::sort(files.begin(), files.end());
    return files;
}

kernforge::TokenTable toy_vocab() {
    kernforge::TokenTable t;
    t.tokens = {
        "", "",  // BOS, EOS
        "\t", "\n", " ", "*", "**", "**kern", "kern", "k", "e", "r", "n",
        "*-", "*^", "*v", "*+", "x", "v", "^", "*clefG2", "*M4/4", "M", "/",
        "=", "=1", "==", ":", ".", "0", "1", "4", "8", "16", "2.",
        "4c", "c", "cc", "C", "g", "8r", "q", "Q", "#", "-", "[", "]", "_",
        ")", "(", "'", ";", "L", "J", "\\",
        "4c\t", "*-\t*-", ".\t.", "*^\t*", "*v\t*v", "\n*-", "4c 4e",
    };
    t.eos_id = 1;
    return t;
}

}  // namespace kftest
