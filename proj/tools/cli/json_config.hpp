#pragma once

// CLI11 config formatter reading JSON. Top-level keys are global flags; an
// object named after a subcommand holds that subcommand's flags.

#include <CLI11.hpp>
#include <json.hpp>

#include <istream>
#include <string>
#include <vector>

namespace wattledger::cli {

class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override
    {
        nlohmann::json doc = nlohmann::json::object();
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable())
                continue;
            const auto& name = opt->get_lnames().front();
            if (opt->count() > 0)
                doc[name] = opt->as<std::vector<std::string>>();
            else if (default_also && !opt->get_default_str().empty())
                doc[name] = opt->get_default_str();
        }
        for (const CLI::App* sub : app->get_subcommands({})) {
            auto nested = nlohmann::json::parse(to_config(sub, default_also, false, ""));
            if (!nested.empty())
                doc[sub->get_name()] = nested;
        }
        return doc.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        nlohmann::json doc;
        try {
            input >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConfigError(std::string("invalid JSON config: ") + e.what());
        }
        if (!doc.is_object())
            throw CLI::ConfigError("JSON config must be an object");
        std::vector<CLI::ConfigItem> items;
        collect(doc, {}, items);
        return items;
    }

private:
    static std::string scalar(const nlohmann::json& v)
    {
        if (v.is_string())
            return v.get<std::string>();
        if (v.is_boolean())
            return v.get<bool>() ? "true" : "false";
        return v.dump();
    }

    static void collect(const nlohmann::json& obj, const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& items)
    {
        for (const auto& [key, value] : obj.items()) {
            if (value.is_object()) {
                auto nested = parents;
                nested.push_back(key);
                collect(value, nested, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value)
                    item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(value));
            }
            items.push_back(std::move(item));
        }
    }
};

} // namespace wattledger::cli
