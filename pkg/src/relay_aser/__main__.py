#!/usr/bin/env python

def main(**kwargs):
    """Main entry point.
    relay-aser
    """
    from .common import main
    main(**kwargs)

if __name__ == '__main__':
    main()
