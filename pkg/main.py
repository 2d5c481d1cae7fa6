# Import libraries
import sys
import os
sys.path.append(os.path.abspath(os.path.dirname(__file__)))

from cli.runner import main


if __name__ == "__main__":
    main()
