from .config import ExperimentConfig, config_from_dict, load_config
from .data import add_gaussian_noise, merge_patches, split_patches
from .metrics import psnr, ssim, ssim_direct
from .pipeline import evaluate, generate, plot, run_all, train, train_method

__all__ = ["ExperimentConfig", "add_gaussian_noise", "config_from_dict", "evaluate", "generate",
           "load_config", "merge_patches", "plot", "psnr", "run_all", "split_patches", "ssim",
           "ssim_direct", "train", "train_method"]
