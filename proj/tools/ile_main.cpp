#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "ile/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"invertible linear embedding toolkit: learn an exactly invertible frame "
                 "embedding with linear latent dynamics, then extrapolate future frames"};
    app.require_subcommand(1);

    ile::GenerateArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("generate", "synthesize a bouncing-sprite dataset");
    cmd_gen->add_option("--config", gen.config_path, "key = value configuration file")->required();
    cmd_gen->add_option("--out", gen.out_path, "output dataset path")->required();

    ile::TrainArgs train;
    CLI::App* cmd_tr = app.add_subcommand("train", "fit the model on a dataset");
    cmd_tr->add_option("--config", train.config_path, "key = value configuration file")->required();
    cmd_tr->add_option("--data", train.data_path, "training dataset")->required();
    cmd_tr->add_option("--ckpt", train.ckpt_in, "checkpoint to resume from");
    cmd_tr->add_option("--ckpt-out", train.ckpt_out, "checkpoint output path")->required();
    cmd_tr->add_option("--steps", train.steps_override, "step count for this run (overrides config)");
    cmd_tr->add_option("--out", train.trace_path, "loss trace path (default <ckpt-out>.trace.csv)");

    ile::PredictArgs pred;
    CLI::App* cmd_pr = app.add_subcommand("predict", "extrapolate frames and export graymaps");
    cmd_pr->add_option("--ckpt", pred.ckpt_path, "trained checkpoint")->required();
    cmd_pr->add_option("--data", pred.data_path, "dataset with conditioning sequences")->required();
    cmd_pr->add_option("--k", pred.k, "conditioning frames (default cond.len)");
    cmd_pr->add_option("--horizon", pred.horizon, "frames to predict (default seq.len - k)");
    cmd_pr->add_option("--out", pred.out_dir, "output directory for PGM frames")->required();
    cmd_pr->add_option("--config", pred.config_path, "config file (checkpoint wins on conflict)");

    ile::EvalArgs eval;
    CLI::App* cmd_ev = app.add_subcommand("eval", "score predictions against ground truth");
    cmd_ev->add_option("--ckpt", eval.ckpt_path, "trained checkpoint")->required();
    cmd_ev->add_option("--data", eval.data_path, "held-out dataset")->required();
    cmd_ev->add_option("--k", eval.k, "conditioning frames (default cond.len)");
    cmd_ev->add_option("--horizon", eval.horizon, "horizons to score (default seq.len - k)");
    cmd_ev->add_option("--report", eval.report_path, "CSV report path")->required();
    cmd_ev->add_option("--config", eval.config_path, "config file (checkpoint wins on conflict)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_gen->parsed()) ile::cmd_generate(gen);
        if (cmd_tr->parsed()) ile::cmd_train(train);
        if (cmd_pr->parsed()) ile::cmd_predict(pred);
        if (cmd_ev->parsed()) ile::cmd_eval(eval);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
