#include "medsel/csv.hpp"

namespace medsel::csv {

bool read_record(std::istream& in, Row& out) {
    out.clear();
    if (in.peek() == std::char_traits<char>::eof()) return false;

    std::string field;
    bool quoted = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get(c);
            break;
        } else {
            field.push_back(c);
        }
    }
    if (!any) return false;
    out.push_back(std::move(field));
    return true;
}

std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string s = "\"";
    for (char c : field) {
        if (c == '"') s.push_back('"');
        s.push_back(c);
    }
    s.push_back('"');
    return s;
}

std::string join(const Row& fields) {
    std::string s;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) s.push_back(',');
        s += escape(fields[i]);
    }
    return s;
}

}  // namespace medsel::csv
